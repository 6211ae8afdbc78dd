#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "twinline/availability.hpp"

using namespace twinline;

namespace {

// square-wave vibration stream independent of the simulator
std::vector<SensorSample> make_sensor(const std::vector<std::pair<double, double>>& stops,
                                      double duration_s, unsigned seed, double hz = 100.0,
                                      double sigma_run = 0.5, double sigma_stop = 0.02) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<SensorSample> out;
    for (std::int64_t j = 0;; ++j) {
        const double t = static_cast<double>(j) / hz;
        if (t > duration_s) break;
        bool stopped = false;
        for (const auto& [s, e] : stops)
            if (t >= s && t < e) stopped = true;
        SensorSample smp;
        smp.time = to_millis(t);
        smp.accel = {0.0, 0.0, 9.81 + (stopped ? sigma_stop : sigma_run) * g(rng)};
        out.push_back(smp);
    }
    return out;
}

double signal_running_seconds(const RunStopSignal& sig) {
    double running = 0.0;
    for (std::size_t i = 0; i < sig.changes.size(); ++i) {
        const Timestamp a = sig.changes[i].first;
        const Timestamp b = i + 1 < sig.changes.size() ? sig.changes[i + 1].first : sig.t1;
        if (sig.changes[i].second == 1) running += to_seconds(b - a);
    }
    return running;
}

}  // namespace

TEST_CASE("vibration feature: constant signal has zero std") {
    std::vector<SensorSample> w(5);
    for (auto& s : w) s.accel = {0.0, 0.0, 9.81};
    CHECK(vibration_feature(w) == 0.0);
}

TEST_CASE("vibration feature: alternating magnitudes give population std") {
    std::vector<SensorSample> w(4);
    w[0].accel = {0.0, 0.0, 9.0};
    w[1].accel = {0.0, 0.0, 11.0};
    w[2].accel = {0.0, 0.0, 9.0};
    w[3].accel = {0.0, 0.0, 11.0};
    CHECK(vibration_feature(w) == Catch::Approx(1.0));
}

TEST_CASE("vibration feature: empty window violates the contract") {
    CHECK_THROWS_AS(vibration_feature({}), ContractViolation);
}

TEST_CASE("classifier: square wave transitions land within the window") {
    const std::vector<std::pair<double, double>> stops = {{60, 90}, {150, 180}, {240, 270}};
    const auto samples = make_sensor(stops, 330.0, 101);
    AvailabilityConfig cfg;
    const auto sig = classify_run_stop(samples, cfg);

    REQUIRE(sig.changes.size() == 7);  // initial running + 3 stop/resume pairs
    CHECK(sig.changes.front().second == 1);
    std::vector<Timestamp> truth;
    for (const auto& [s, e] : stops) {
        truth.push_back(to_millis(s));
        truth.push_back(to_millis(e));
    }
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const Timestamp detected = sig.changes[i + 1].first;
        CHECK(std::llabs(detected - truth[i]) <= to_millis(cfg.window_s));
    }

    // with edge refinement the boundary error is a few sensor periods
    for (std::size_t i = 0; i < truth.size(); ++i) {
        CHECK(std::llabs(sig.changes[i + 1].first - truth[i]) <= 50);
    }
}

TEST_CASE("classifier: all-quiet session is one stopped state") {
    const auto samples = make_sensor({{0, 400}}, 330.0, 102);
    AvailabilityConfig cfg;
    cfg.mode = AvailabilityConfig::ThresholdMode::manual;
    cfg.run_threshold = 0.3;
    cfg.stop_threshold = 0.15;
    const auto sig = classify_run_stop(samples, cfg);
    REQUIRE(sig.changes.size() == 1);
    CHECK(sig.changes.front().second == 0);
    const auto events = downtime_events(sig, 0, to_millis(330.0));
    REQUIRE(events.size() == 1);
    CHECK(total_downtime_s(events) == Catch::Approx(330.0));
}

TEST_CASE("classifier: auto mode refuses a unimodal feature histogram") {
    const auto samples = make_sensor({}, 120.0, 103);  // running throughout
    AvailabilityConfig cfg;
    CHECK_THROWS_AS(classify_run_stop(samples, cfg), CalibrationError);
}

TEST_CASE("classifier: short blip during a stop is debounced away") {
    // 0.5 s of vibration inside a long stop
    auto samples = make_sensor({{60, 120}}, 180.0, 104);
    std::mt19937_64 rng(105);
    std::normal_distribution<double> g(0.0, 1.0);
    for (auto& s : samples) {
        const double t = to_seconds(s.time);
        if (t >= 90.0 && t < 90.5) s.accel[2] = 9.81 + 0.5 * g(rng);
    }
    const auto sig = classify_run_stop(samples, AvailabilityConfig{});
    REQUIRE(sig.changes.size() == 3);  // run, stop, run; the blip is gone
    CHECK(sig.changes[1].second == 0);
    CHECK(sig.changes[2].second == 1);
}

TEST_CASE("classifier: uniform 10x scaling changes no transition in auto mode") {
    const std::vector<std::pair<double, double>> stops = {{45, 80}, {130, 200}};
    const auto samples = make_sensor(stops, 260.0, 106);
    auto scaled = samples;
    for (auto& s : scaled)
        for (auto& a : s.accel) a *= 10.0;
    const auto sig1 = classify_run_stop(samples, AvailabilityConfig{});
    const auto sig2 = classify_run_stop(scaled, AvailabilityConfig{});
    REQUIRE(sig1.changes.size() == sig2.changes.size());
    for (std::size_t i = 0; i < sig1.changes.size(); ++i) {
        CHECK(sig1.changes[i] == sig2.changes[i]);
    }
}

TEST_CASE("classifier: extra stop never decreases detected downtime") {
    const std::vector<std::pair<double, double>> base = {{60, 100}};
    const std::vector<std::pair<double, double>> more = {{60, 100}, {160, 190}};
    for (unsigned seed = 1; seed <= 20; ++seed) {
        const auto a = classify_run_stop(make_sensor(base, 260.0, seed), AvailabilityConfig{});
        const auto b = classify_run_stop(make_sensor(more, 260.0, seed), AvailabilityConfig{});
        const double down_a = total_downtime_s(downtime_events(a, 0, to_millis(260.0)));
        const double down_b = total_downtime_s(downtime_events(b, 0, to_millis(260.0)));
        CHECK(down_b >= down_a);
    }
}

TEST_CASE("downtime events: interval arithmetic") {
    RunStopSignal sig;
    sig.t0 = 0;
    sig.t1 = 60'000;
    sig.changes = {{0, 1}, {10'000, 0}, {20'000, 1}, {50'000, 0}, {55'000, 1}};
    const auto events = downtime_events(sig, 0, 60'000);
    REQUIRE(events.size() == 2);
    CHECK(events[0].t_stop == 10'000);
    CHECK(events[0].t_start == 20'000);
    CHECK(total_downtime_s(events) == Catch::Approx(15.0));
}

TEST_CASE("downtime events: running throughout is empty") {
    RunStopSignal sig;
    sig.t0 = 0;
    sig.t1 = 60'000;
    sig.changes = {{0, 1}};
    CHECK(downtime_events(sig, 0, 60'000).empty());
    CHECK(total_downtime_s({}) == 0.0);
}

TEST_CASE("downtime events: stop at session end is clipped") {
    RunStopSignal sig;
    sig.t0 = 0;
    sig.t1 = 100'000;
    sig.changes = {{0, 1}, {95'000, 0}};
    const auto events = downtime_events(sig, 0, 100'000);
    REQUIRE(events.size() == 1);
    CHECK(events[0].t_stop == 95'000);
    CHECK(events[0].t_start == 100'000);
}

TEST_CASE("downtime plus running time equals the session exactly") {
    std::mt19937_64 rng(107);
    for (int trial = 0; trial < 50; ++trial) {
        RunStopSignal sig;
        sig.t0 = 0;
        sig.t1 = 100'000;
        Timestamp t = 0;
        int state = static_cast<int>(rng() % 2);
        sig.changes.emplace_back(0, state);
        while (true) {
            t += 1000 + static_cast<Timestamp>(rng() % 20'000);
            if (t >= sig.t1) break;
            state = 1 - state;
            sig.changes.emplace_back(t, state);
        }
        const double down = total_downtime_s(downtime_events(sig, 0, sig.t1));
        const double running = signal_running_seconds(sig);
        CHECK(down + running == Catch::Approx(to_seconds(sig.t1)).epsilon(1e-12));
    }
}

TEST_CASE("debounce is idempotent") {
    std::vector<std::pair<Timestamp, int>> changes = {
        {0, 1}, {10'000, 0}, {10'500, 1}, {11'000, 0}, {30'000, 1}, {30'800, 0}, {31'600, 1}};
    const auto once = detail::debounce_changes(changes, 60'000, 2000);
    const auto twice = detail::debounce_changes(once, 60'000, 2000);
    CHECK(once == twice);
    // all interior segments now meet the minimum duration
    for (std::size_t i = 1; i + 1 < once.size(); ++i) {
        CHECK(once[i + 1].first - once[i].first >= 2000);
    }
}

TEST_CASE("auto thresholds sit between the modes and scale with the data") {
    std::mt19937_64 rng(108);
    std::normal_distribution<double> lo(0.02, 0.004), hi(0.5, 0.03);
    std::vector<double> feats;
    for (int i = 0; i < 3000; ++i) feats.push_back(i % 4 == 0 ? lo(rng) : hi(rng));
    const auto th = auto_thresholds(feats);
    CHECK(th.stop > 0.05);
    CHECK(th.run < 0.45);
    CHECK(th.stop < th.run);
    std::vector<double> scaled = feats;
    for (auto& f : scaled) f *= 10.0;
    const auto th10 = auto_thresholds(scaled);
    CHECK(th10.run == Catch::Approx(10.0 * th.run).epsilon(1e-9));
    CHECK(th10.stop == Catch::Approx(10.0 * th.stop).epsilon(1e-9));
}
