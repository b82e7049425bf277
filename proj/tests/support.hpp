#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <unistd.h>

#include <slicekpi/slicekpi.hpp>

namespace testutil {

inline slicekpi::TelemetrySample sample(std::uint64_t slot, slicekpi::SliceType s, double thr,
                                        std::size_t V = 3, std::size_t L = 2) {
    slicekpi::TelemetrySample x;
    x.slot = slot;
    x.slice = s;
    x.throughput = thr;
    x.vnf_cpu.assign(V, 0.5);
    x.vnf_ram.assign(V, 0.4);
    x.vnf_sto.assign(V, 0.1);
    x.link_cap.assign(L, 0.6);
    x.delay_ms = 2.0;
    x.packet_loss = 0.01;
    x.jitter_ms = 0.1;
    return x;
}

/// One slice, n slots, throughput = 10 + slot.
inline slicekpi::Dataset ramp(std::size_t n, slicekpi::SliceType s = slicekpi::SliceType::EMBB) {
    slicekpi::Dataset ds;
    for (std::size_t t = 0; t < n; ++t) ds.series[s].push_back(sample(t, s, 10.0 + double(t)));
    return ds;
}

inline slicekpi::GeneratorConfig small_config(std::uint64_t seed = 1) {
    auto c = slicekpi::default_config();
    c.seed = seed;
    return c;
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("slicekpi-" + tag + "-" + std::to_string(::getpid()));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
};

}  // namespace testutil
