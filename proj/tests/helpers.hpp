// Shared helpers for the test suites: scratch directories and canned
// simulator scenarios.
#pragma once

#include <atomic>
#include <filesystem>
#include <string>

#include "twinline/simulator.hpp"

namespace twinline::testing {

class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        const auto base = std::filesystem::temp_directory_path();
        path_ = base / ("twinline_test_" + std::to_string(::getpid()) + "_" +
                        std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

// Two cameras, one per edge, noiseless by default.
inline Scenario basic_scenario(double duration_s = 120.0, double injection_period_s = 1.1,
                               std::uint64_t seed = 1) {
    Scenario sc;
    sc.duration_s = duration_s;
    sc.injection_period_s = injection_period_s;
    sc.rng_seed = seed;
    CameraSetup cam1;
    cam1.id = 1;
    cam1.px_per_m = 320.0;
    cam1.px_offset = 0.0;
    cam1.watches = {{1, 1}};
    CameraSetup cam2;
    cam2.id = 2;
    cam2.px_per_m = 320.0;
    cam2.px_offset = -640.0;  // maps belt [2m, 4m] onto [0, 640] px
    cam2.watches = {{2, 1}};
    sc.cameras = {cam1, cam2};
    return sc;
}

}  // namespace twinline::testing
