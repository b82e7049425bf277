#include <gtest/gtest.h>

#include "support.hpp"

using namespace slicekpi;
using testutil::ramp;
using testutil::sample;

TEST(Slice, LabelsRoundTrip) {
    for (auto s : kAllSlices) EXPECT_EQ(parse_slice(to_string(s)), s);
    EXPECT_EQ(to_string(SliceType::EMBB), "eMBB");
    EXPECT_EQ(to_string(SliceType::VOIP), "VoIP");
    EXPECT_FALSE(try_parse_slice("embb").has_value());
    EXPECT_THROW(parse_slice("5G"), DataError);
}

TEST(Kpi, NamesAndValues) {
    for (auto k : kAllKpis) EXPECT_EQ(parse_kpi(to_string(k)), k);
    EXPECT_THROW(parse_kpi("latency"), ConfigError);
    auto s = sample(0, SliceType::URLLC, 5.0);
    s.delay_ms = 3.5;
    s.packet_loss = 0.2;
    s.jitter_ms = 0.7;
    EXPECT_EQ(kpi_value(s, Kpi::Delay), 3.5);
    EXPECT_EQ(kpi_value(s, Kpi::PacketLoss), 0.2);
    EXPECT_EQ(kpi_value(s, Kpi::Jitter), 0.7);
}

TEST(Errors, KindsAreDistinct) {
    EXPECT_EQ(ConfigError("x").kind(), ErrorKind::Config);
    EXPECT_EQ(DataError("x").kind(), ErrorKind::Data);
    EXPECT_EQ(NumericalError("x").kind(), ErrorKind::Numerical);
}

TEST(Validate, CleanDatasetPasses) {
    auto ds = ramp(20);
    auto rep = validate_dataset(ds);
    EXPECT_TRUE(rep.ok()) << rep.summary();
}

TEST(Validate, ReportsEveryRule) {
    auto ds = ramp(6);
    auto& v = ds.series[SliceType::EMBB];
    v[1].slice = SliceType::MMTC;
    v[2].slot = 7;
    v[3].throughput = -1.0;
    v[4].vnf_cpu.pop_back();
    v[4].link_cap[0] = 1.5;
    v[5].delay_ms = 0.0;
    v[5].packet_loss = 1.2;
    v[5].jitter_ms = -0.1;
    ds.series[SliceType::VOIP];

    auto rep = validate_dataset(ds);
    EXPECT_FALSE(rep.ok());
    EXPECT_EQ(rep.count("slice label"), 1u);
    EXPECT_EQ(rep.count("slot stride"), 2u);  // 1->7 and 7->4
    EXPECT_EQ(rep.count("throughput range"), 1u);
    EXPECT_EQ(rep.count("vnf_cpu length"), 1u);
    EXPECT_EQ(rep.count("link_cap range"), 1u);
    EXPECT_EQ(rep.count("delay_ms range"), 1u);
    EXPECT_EQ(rep.count("packet_loss range"), 1u);
    EXPECT_EQ(rep.count("jitter_ms range"), 1u);
    EXPECT_EQ(rep.count("empty series"), 1u);
    EXPECT_NE(rep.summary().find("eMBB slot 3: throughput range"), std::string::npos);
}

TEST(Validate, NanIsOutOfRange) {
    auto ds = ramp(3);
    ds.series[SliceType::EMBB][1].vnf_sto[2] = std::nan("");
    EXPECT_EQ(validate_dataset(ds).count("vnf_sto range"), 1u);
}

TEST(Dataset, AtAndCount) {
    auto ds = ramp(4);
    EXPECT_EQ(ds.sample_count(), 4u);
    EXPECT_EQ(ds.at(SliceType::EMBB).size(), 4u);
    EXPECT_THROW(ds.at(SliceType::URLLC), DataError);
}

TEST(Rng, SplitMixReferenceValues) {
    // Reference stream for seed 0 (Vigna's splitmix64.c).
    SplitMix64 r(0);
    EXPECT_EQ(r.next(), 0xE220A8397B1DCDAFULL);
    EXPECT_EQ(r.next(), 0x6E789E6AA1B965F4ULL);
    EXPECT_EQ(r.next(), 0x06C45D188009454FULL);
}

TEST(Rng, BelowStaysInRange) {
    SplitMix64 r(42);
    std::array<int, 7> hits{};
    for (int i = 0; i < 7000; ++i) ++hits[r.below(7)];
    for (int h : hits) EXPECT_GT(h, 800);
    for (int i = 0; i < 1000; ++i) {
        double u = r.uniform01();
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
    }
}

TEST(Linalg, CholeskyMatchesHandSolution) {
    Matrix a(2, 2);
    a(0, 0) = 4; a(0, 1) = 2;
    a(1, 0) = 2; a(1, 1) = 3;
    auto x = cholesky_solve(a, {2, 5});
    ASSERT_TRUE(x);
    // 4x + 2y = 2, 2x + 3y = 5  ->  x = -0.5, y = 2
    EXPECT_NEAR((*x)[0], -0.5, 1e-14);
    EXPECT_NEAR((*x)[1], 2.0, 1e-14);
}

TEST(Linalg, CholeskyRejectsSingular) {
    Matrix a(2, 2, 1.0);
    EXPECT_FALSE(cholesky_solve(a, {1, 1}).has_value());
}
