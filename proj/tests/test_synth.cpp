#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"

using namespace slicekpi;

TEST(Synth, DefaultUeCounts) {
    auto c = default_config();
    EXPECT_EQ(c.slices[index_of(SliceType::EMBB)].ue_count, 24322u);
    EXPECT_EQ(c.slices[index_of(SliceType::URLLC)].ue_count, 7304u);
    EXPECT_EQ(c.slices[index_of(SliceType::MMTC)].ue_count, 6283u);
    EXPECT_EQ(c.slices[index_of(SliceType::VOIP)].ue_count, 2684u);
}

TEST(Synth, ShapeAndValidity) {
    auto ds = generate(default_config());
    EXPECT_EQ(ds.sample_count(), 2304u);
    for (auto s : kAllSlices) {
        ASSERT_EQ(ds.at(s).size(), 576u);
        EXPECT_EQ(ds.at(s).front().slot, 0u);
        EXPECT_EQ(ds.at(s).back().slot, 575u);
    }
    auto rep = validate_dataset(ds);
    EXPECT_TRUE(rep.ok()) << rep.summary();
}

TEST(Synth, SameSeedSameBytes) {
    std::ostringstream a, b, c;
    write_csv(generate(testutil::small_config(5)), a);
    write_csv(generate(testutil::small_config(5)), b);
    write_csv(generate(testutil::small_config(6)), c);
    EXPECT_EQ(a.str(), b.str());
    EXPECT_NE(a.str(), c.str());
}

TEST(Synth, NoiseFreeDaysRepeat) {
    auto c = default_config();
    c.noise_level = 0.0;
    c.burst_probability = 0.0;
    c.days = 3;
    auto ds = generate(c);
    for (auto s : kAllSlices) {
        const auto& v = ds.at(s);
        for (std::size_t t = 0; t < kSlotsPerDay; ++t)
            for (std::size_t d = 1; d < 3; ++d) {
                EXPECT_EQ(v[t].throughput, v[t + d * kSlotsPerDay].throughput);
                EXPECT_EQ(v[t].delay_ms, v[t + d * kSlotsPerDay].delay_ms);
                EXPECT_EQ(v[t].packet_loss, v[t + d * kSlotsPerDay].packet_loss);
            }
    }
}

TEST(Synth, KpiCurvesMonotoneInUtil) {
    auto c = default_config();
    double pd = -1.0, pl = -1.0;
    for (int i = 0; i <= 99; ++i) {
        double u = i / 100.0;
        double d = delay_curve(u, c), l = loss_curve(u, c);
        EXPECT_GT(d, pd);
        EXPECT_GT(l, pl);
        pd = d;
        pl = l;
    }
    EXPECT_DOUBLE_EQ(delay_curve(0.0, c), c.delay_base_ms);
    EXPECT_DOUBLE_EQ(delay_curve(0.5, c), c.delay_base_ms + c.delay_scale_ms);
    EXPECT_DOUBLE_EQ(loss_curve(c.loss_midpoint, c), c.loss_max / 2);
}

TEST(Synth, GeneratedKpisFollowUtil) {
    auto ds = generate(default_config());
    const auto& v = ds.at(SliceType::URLLC);
    auto cap = default_config().slices[index_of(SliceType::URLLC)].capacity_mbps;
    auto c = default_config();
    for (const auto& s : v) {
        double u = s.throughput / cap;
        EXPECT_LE(u, kUtilCap + 1e-9);
        EXPECT_NEAR(s.delay_ms, delay_curve(u, c), 1e-6 * s.delay_ms + 1e-6);
    }
}

TEST(Synth, ProfileHasTwoPeaks) {
    auto c = default_config();
    EXPECT_GT(diurnal_profile(12.0, c), diurnal_profile(4.0, c));
    EXPECT_GT(diurnal_profile(19.5, c), diurnal_profile(16.0, c));
    EXPECT_NEAR(diurnal_profile(0.0, c), 0.30, 1e-3);
    EXPECT_DOUBLE_EQ(hour_of_slot(12), 1.0);
    EXPECT_DOUBLE_EQ(hour_of_slot(288 + 6), 0.5);
}

TEST(Synth, ShapeParameters) {
    auto c = default_config();
    c.vnf_count = 1;
    c.link_count = 4;
    c.days = 1;
    auto ds = generate(c);
    EXPECT_EQ(ds.meta.vnf_count, 1u);
    EXPECT_EQ(ds.at(SliceType::VOIP)[0].link_cap.size(), 4u);
    EXPECT_EQ(ds.at(SliceType::VOIP).size(), 288u);
}

TEST(Synth, ConfigValidation) {
    auto c = default_config();
    c.days = 0;
    EXPECT_THROW(generate(c), ConfigError);
    c = default_config();
    c.noise_level = 1.0;
    EXPECT_THROW(validate(c), ConfigError);
    c = default_config();
    c.slices[2].capacity_mbps = 0.0;
    try {
        validate(c);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("slices.mMTC.capacity_mbps"), std::string::npos);
    }
}

TEST(Synth, JsonRoundTripAndUnknownKeys) {
    auto c = default_config();
    c.seed = 77;
    c.peak2_width_h = 1.25;
    EXPECT_EQ(generator_config_from_json(to_json(c)), c);
    auto partial = generator_config_from_json(nlohmann::json{{"seed", 4}});
    EXPECT_EQ(partial.seed, 4u);
    EXPECT_EQ(partial.slices, default_config().slices);
    EXPECT_THROW(generator_config_from_json(nlohmann::json{{"sede", 4}}), ConfigError);
    EXPECT_THROW(generator_config_from_json(nlohmann::json{{"seed", "x"}}), ConfigError);
    EXPECT_THROW(generator_config_from_json(nlohmann::json{{"kpi", {{"loss_max", 2.0}}}}), ConfigError);
}

TEST(Synth, DigestTracksConfig) {
    auto a = default_config();
    auto b = a;
    b.noise_level = 0.2;
    EXPECT_EQ(config_digest(a), config_digest(a));
    EXPECT_NE(config_digest(a), config_digest(b));
    EXPECT_EQ(config_digest(a).size(), 16u);
}

TEST(Synth, Round9) {
    EXPECT_EQ(round9(1.0 / 3.0), 0.333333333);
    EXPECT_EQ(round9(24322.0), 24322.0);
}
