// Deterministic discrete-time simulation of the three-node conveyor loop:
// piece injection at Node 1, QA removal at Node 2, exit at Node 3, scripted
// or stochastic stoppages, synthetic detections per camera, synthetic motor
// sensor data, and an exact ground-truth ledger. The ledger's KPI series are
// computed through the same kpi code path the engine uses.
//
// The belt is a 1-D coordinate in meters with per-camera linear projections
// to pixels. Pieces advance at belt speed only while the line runs; positions
// are driven by the cumulative-running-time clock, so crossing times are
// exact under stops.
//
// One seeded RNG, single stream. Draw order: stochastic stops, then per-piece
// defect fates, then per camera (ascending id) per frame the detection noise
// draws, then the sensor stream.
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "twinline/core.hpp"
#include "twinline/counting.hpp"
#include "twinline/ingest.hpp"
#include "twinline/kpi.hpp"

namespace twinline {

struct StochasticStops {
    double mean_interval_s = 600.0;
    double mean_duration_s = 60.0;
    double min_duration_s = 10.0;
};

struct StopSpec {
    std::vector<std::pair<double, double>> explicit_s;  // (t_stop, t_start) seconds
    std::optional<StochasticStops> stochastic;
};

struct NoiseSpec {
    double miss_probability = 0.0;
    double bbox_jitter_px = 0.0;
    double false_positive_rate_per_frame = 0.0;
    double confidence_mean = 0.9;
    double confidence_std = 0.04;
    bool merge_enabled = false;   // detector merge failure for dense packing
    double merge_gap_frac = 0.1;  // merge when screen gap < frac * box width
};

struct SensorSpec {
    double hz = 100.0;
    double sigma_run = 0.5;    // accel magnitude std while running, m/s^2
    double sigma_stop = 0.02;  // while stopped
    bool extended_channels = true;
};

// Node and wire positions along the belt, meters. Counting wires sit at
// wire_frac along each edge; the paired speed wire sits wire_gap_m further.
struct LineLayout {
    double node1_m = 0.0;
    double node2_m = 2.0;
    double node3_m = 4.0;
    double wire_frac = 0.5;
    double wire_gap_m = 0.5;
};

struct CameraSetup {
    int id = 1;
    std::optional<double> fps;  // defaults to scenario tick_hz
    double px_per_m = 320.0;    // projection scale; negative mirrors the view
    double px_offset = 0.0;     // pixel x of belt position 0
    double image_w = 640.0;
    double image_h = 480.0;
    double y_center = 240.0;
    std::optional<double> active_until_s;  // camera stops recording here
    std::vector<std::pair<int, int>> watches;  // (edge_id, priority)
};

struct Scenario {
    double duration_s = 600.0;
    double tick_hz = 30.0;
    double belt_speed_mps = 0.25;
    double injection_period_s = 1.1;
    double tau_ideal_s = 1.1;
    double defect_probability = 0.0;
    double drain_tail_s = 0.0;  // stop injecting this long before session end
    double piece_len_m = 0.1;
    std::string class_label = "box";
    bool emit_per_frame_truth = false;
    std::uint64_t rng_seed = 1;
    LineLayout line;
    StopSpec stops;
    NoiseSpec noise;
    SensorSpec sensor;
    std::vector<CameraSetup> cameras;

    void validate() const {
        if (!(duration_s > 0.0)) throw ValidationError("scenario: duration_s must be > 0");
        if (!(tick_hz > 0.0)) throw ValidationError("scenario: tick_hz must be > 0");
        if (!(belt_speed_mps > 0.0)) throw ValidationError("scenario: belt speed must be > 0");
        if (!(injection_period_s > 0.0))
            throw ValidationError("scenario: injection_period_s must be > 0");
        if (!(tau_ideal_s > 0.0)) throw ValidationError("scenario: tau_ideal_s must be > 0");
        if (defect_probability < 0.0 || defect_probability > 1.0)
            throw ValidationError("scenario: defect_probability must be in [0,1]");
        if (noise.miss_probability < 0.0 || noise.miss_probability > 1.0)
            throw ValidationError("scenario: miss_probability must be in [0,1]");
        if (!(line.node1_m < line.node2_m && line.node2_m < line.node3_m))
            throw ValidationError("scenario: node positions must increase");
        if (!(line.wire_frac > 0.0 && line.wire_frac < 1.0))
            throw ValidationError("scenario: wire_frac must be in (0,1)");
        if (cameras.empty()) throw ValidationError("scenario: needs at least one camera");
        double prev_end = -1.0;
        for (const auto& [s, e] : stops.explicit_s) {
            if (!(s < e)) throw ValidationError("scenario: stop interval needs t_stop < t_start");
            if (s <= prev_end)
                throw ValidationError("scenario: stop intervals overlap or are unordered");
            if (s < 0.0 || e > duration_s)
                throw ValidationError("scenario: stop interval outside [0, duration]");
            prev_end = e;
        }
        for (const auto& c : cameras) {
            if (c.id < 1) throw ValidationError("scenario: camera id must be >= 1");
            if (c.px_per_m == 0.0) throw ValidationError("scenario: px_per_m must be nonzero");
            if (c.watches.empty())
                throw ValidationError("scenario: camera must watch at least one edge");
        }
    }
};

struct SimOutput {
    DetectionStreams detections;
    std::vector<SensorSample> sensor;
    GroundTruthLedger ledger;
    LineTopology topology;
    LedgerKpis true_kpis;
    // per-camera true frames with piece ids (filled when emit_per_frame_truth)
    std::map<int, std::vector<PerFrameTruthFrame>> truth_frames;
};

namespace detail {

// Cumulative-running-time clock over a stop schedule.
class RunClock {
public:
    RunClock(std::vector<std::pair<double, double>> stops, double duration)
        : stops_(std::move(stops)), duration_(duration) {
        double acc = 0.0;
        for (const auto& [s, e] : stops_) {
            stopped_before_.push_back(acc);
            acc += e - s;
        }
        total_stopped_ = acc;
    }

    double duration() const { return duration_; }
    double running_total() const { return duration_ - total_stopped_; }

    bool running_at(double t) const {
        for (const auto& [s, e] : stops_) {
            if (t < s) return true;
            if (t < e) return false;
        }
        return true;
    }

    // R(t): running seconds accumulated in [0, t]
    double running_before(double t) const {
        double stopped = 0.0;
        for (std::size_t i = 0; i < stops_.size(); ++i) {
            if (stops_[i].first >= t) break;
            stopped += std::min(stops_[i].second, t) - stops_[i].first;
        }
        return t - stopped;
    }

    // R^{-1}(r): earliest wall time with R(t) == r
    double time_at_running(double r) const {
        double seg_start = 0.0, acc = 0.0;
        for (const auto& [s, e] : stops_) {
            const double len = s - seg_start;
            if (r <= acc + len) return seg_start + (r - acc);
            acc += len;
            seg_start = e;
        }
        return seg_start + (r - acc);
    }

    const std::vector<std::pair<double, double>>& stops() const { return stops_; }

private:
    std::vector<std::pair<double, double>> stops_;
    std::vector<double> stopped_before_;
    double duration_ = 0.0;
    double total_stopped_ = 0.0;
};

struct SimPiece {
    int id = 0;
    double r_inject = 0.0;  // cumulative running time at injection
    double t_inject = 0.0;  // wall seconds
    bool defective = false;
    double end_pos = 0.0;  // node2 when removed, node3 otherwise
    double t_end = 0.0;    // wall seconds of removal/exit (may exceed duration)
};

}  // namespace detail

// Derives the LineTopology (nodes, edges, per-camera tripwires) implied by a
// scenario. Wires are oriented so production flow crosses with sign +1.
inline LineTopology make_topology(const Scenario& sc) {
    LineTopology topo;
    topo.ideal_cycle_time_s = sc.tau_ideal_s;
    topo.planned_production_time_s = sc.duration_s;
    topo.nodes = {{1, "Start"}, {2, "Quality Assurance"}, {3, "End"}};

    struct EdgeSpan {
        int id;
        int from, to;
        double begin_m, end_m;
    };
    const std::vector<EdgeSpan> spans = {{1, 1, 2, sc.line.node1_m, sc.line.node2_m},
                                         {2, 2, 3, sc.line.node2_m, sc.line.node3_m}};
    for (const auto& span : spans) {
        EdgeDef e;
        e.id = span.id;
        e.from_node = span.from;
        e.to_node = span.to;
        const double wire0 = span.begin_m + sc.line.wire_frac * (span.end_m - span.begin_m);
        const double wire1 = wire0 + sc.line.wire_gap_m;
        for (const auto& cam : sc.cameras) {
            int priority = -1;
            for (const auto& [edge_id, prio] : cam.watches) {
                if (edge_id == e.id) priority = prio;
            }
            if (priority < 0) continue;
            auto wire_at = [&](double pos_m) -> std::optional<LineSegment2D> {
                const double x = cam.px_offset + cam.px_per_m * pos_m;
                const double margin = std::abs(cam.px_per_m) * sc.piece_len_m;
                if (x < margin || x > cam.image_w - margin) return std::nullopt;
                const double span_px =
                    std::max(3.0 * std::abs(cam.px_per_m) * sc.piece_len_m, 60.0);
                if (cam.px_per_m > 0)
                    return LineSegment2D{{x, cam.y_center + span_px}, {x, cam.y_center - span_px}};
                return LineSegment2D{{x, cam.y_center - span_px}, {x, cam.y_center + span_px}};
            };
            const auto w0 = wire_at(wire0);
            if (!w0) continue;  // wire must be inside this camera's view
            TripwireDef tw;
            tw.camera.value = cam.id;
            tw.priority = priority;
            tw.wire_a = *w0;
            if (wire1 < span.end_m) {
                if (const auto w1 = wire_at(wire1)) {
                    tw.wire_b = *w1;
                    tw.gap_m = sc.line.wire_gap_m;
                }
            }
            e.tripwires.push_back(tw);
        }
        if (e.tripwires.empty())
            throw ValidationError("scenario: no camera covers the counting wire of edge " +
                                  std::to_string(e.id));
        topo.edges.push_back(std::move(e));
    }
    topo.validate();
    return topo;
}

inline SimOutput simulate(const Scenario& sc) {
    sc.validate();
    std::mt19937_64 rng(sc.rng_seed);

    // 1. effective stop schedule
    std::vector<std::pair<double, double>> stops = sc.stops.explicit_s;
    if (sc.stops.stochastic) {
        const auto& st = *sc.stops.stochastic;
        std::exponential_distribution<double> gap_dist(1.0 / st.mean_interval_s);
        std::exponential_distribution<double> dur_dist(1.0 / st.mean_duration_s);
        double t = 0.0;
        std::vector<std::pair<double, double>> drawn;
        while (true) {
            t += st.min_duration_s + gap_dist(rng);
            const double d = std::max(st.min_duration_s, dur_dist(rng));
            if (t + d >= sc.duration_s) break;
            drawn.emplace_back(t, t + d);
            t += d;
        }
        for (const auto& cand : drawn) {
            bool clash = false;
            for (const auto& ex : stops) {
                if (cand.first < ex.second && ex.first < cand.second) clash = true;
            }
            if (!clash) stops.push_back(cand);
        }
        std::sort(stops.begin(), stops.end());
    }
    // snap stop edges to whole milliseconds so the ledger and sensor agree
    for (auto& [s, e] : stops) {
        s = to_seconds(to_millis(s));
        e = to_seconds(to_millis(e));
    }
    const detail::RunClock clock(stops, sc.duration_s);

    // 2. piece lifecycle
    const double inject_until = sc.duration_s - sc.drain_tail_s;
    std::vector<detail::SimPiece> pieces;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int k = 0;; ++k) {
        const double r = static_cast<double>(k) * sc.injection_period_s;
        if (r > clock.running_total()) break;
        const double t_inject = clock.time_at_running(r);
        if (t_inject > inject_until) break;
        detail::SimPiece p;
        p.id = k;
        p.r_inject = r;
        p.t_inject = t_inject;
        p.defective = unit(rng) < sc.defect_probability;
        p.end_pos = p.defective ? sc.line.node2_m : sc.line.node3_m;
        p.t_end = clock.time_at_running(r + p.end_pos / sc.belt_speed_mps);
        pieces.push_back(p);
    }

    SimOutput out;
    out.topology = make_topology(sc);

    // 3. ledger events
    auto& led = out.ledger;
    led.session_end = to_millis(sc.duration_s);
    for (const auto& [s, e] : clock.stops())
        led.stop_intervals.emplace_back(to_millis(s), to_millis(e));
    for (const auto& p : pieces) led.injections.emplace_back(to_millis(p.t_inject), p.id);
    for (const auto& p : pieces) {
        if (p.t_end > sc.duration_s) continue;  // in transit at session end
        if (p.defective)
            led.removals_at_qa.emplace_back(to_millis(p.t_end), p.id);
        else
            led.exits.emplace_back(to_millis(p.t_end), p.id);
    }
    for (const auto& e : out.topology.edges) {
        const double begin_m = e.id == 1 ? sc.line.node1_m : sc.line.node2_m;
        const double end_m = e.id == 1 ? sc.line.node2_m : sc.line.node3_m;
        const double wire0 = begin_m + sc.line.wire_frac * (end_m - begin_m);
        auto& xs = led.edge_crossings[e.id];
        for (const auto& p : pieces) {
            if (wire0 >= p.end_pos) continue;  // removed before reaching this wire
            const double tc = clock.time_at_running(p.r_inject + wire0 / sc.belt_speed_mps);
            if (tc <= sc.duration_s) xs.emplace_back(to_millis(tc), p.id);
        }
        std::sort(xs.begin(), xs.end());
    }

    // 4. detections per camera
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<CameraSetup> cams = sc.cameras;
    std::sort(cams.begin(), cams.end(),
              [](const CameraSetup& a, const CameraSetup& b) { return a.id < b.id; });
    for (const auto& cam : cams) {
        const double fps = cam.fps.value_or(sc.tick_hz);
        const double cam_end = std::min(cam.active_until_s.value_or(sc.duration_s), sc.duration_s);
        const double half_w = std::abs(cam.px_per_m) * sc.piece_len_m / 2.0;
        const double half_h = half_w;
        auto& dets = out.detections.by_camera[cam.id];
        auto& truth = out.truth_frames[cam.id];
        std::size_t first_alive = 0;

        for (std::int64_t k = 0;; ++k) {
            const double t_s = static_cast<double>(k) / fps;
            if (t_s > cam_end) break;
            const Timestamp t_ms = to_millis(t_s);
            const double run = clock.running_before(t_s);

            while (first_alive < pieces.size() && pieces[first_alive].t_end < t_s) ++first_alive;
            struct Cand {
                double cx, cy, w, h;
                int piece_id;
            };
            std::vector<Cand> cands;
            for (std::size_t i = first_alive; i < pieces.size(); ++i) {
                const auto& p = pieces[i];
                if (p.t_inject > t_s) break;
                if (p.t_end < t_s) continue;
                const double pos = sc.belt_speed_mps * (run - p.r_inject);
                if (pos < 0.0 || pos >= p.end_pos) continue;
                const double cx = cam.px_offset + cam.px_per_m * pos;
                if (cx - half_w < 0.0 || cx + half_w > cam.image_w) continue;
                cands.push_back({cx, cam.y_center, 2.0 * half_w, 2.0 * half_h, p.id});
            }
            std::sort(cands.begin(), cands.end(),
                      [](const Cand& a, const Cand& b) { return a.cx < b.cx; });

            if (sc.emit_per_frame_truth) {
                PerFrameTruthFrame f;
                f.time = t_ms;
                for (const auto& c : cands) {
                    f.boxes.push_back(
                        {c.cx - c.w / 2.0, c.cy - c.h / 2.0, c.cx + c.w / 2.0, c.cy + c.h / 2.0});
                    f.piece_ids.push_back(c.piece_id);
                }
                truth.push_back(std::move(f));
            }

            if (sc.noise.merge_enabled && cands.size() > 1) {
                std::vector<Cand> merged;
                Cand cur = cands[0];
                for (std::size_t i = 1; i < cands.size(); ++i) {
                    const double gap =
                        (cands[i].cx - cands[i].w / 2.0) - (cur.cx + cur.w / 2.0);
                    if (gap < sc.noise.merge_gap_frac * cands[i].w) {
                        const double lo = cur.cx - cur.w / 2.0;
                        const double hi = cands[i].cx + cands[i].w / 2.0;
                        cur.cx = (lo + hi) / 2.0;
                        cur.w = hi - lo;
                    } else {
                        merged.push_back(cur);
                        cur = cands[i];
                    }
                }
                merged.push_back(cur);
                cands = std::move(merged);
            }

            for (const auto& c : cands) {
                if (sc.noise.miss_probability > 0.0 && unit(rng) < sc.noise.miss_probability)
                    continue;
                double cx = c.cx, cy = c.cy, w = c.w, h = c.h;
                if (sc.noise.bbox_jitter_px > 0.0) {
                    cx += sc.noise.bbox_jitter_px * gauss(rng);
                    cy += sc.noise.bbox_jitter_px * gauss(rng);
                    w = std::max(2.0, w + 0.5 * sc.noise.bbox_jitter_px * gauss(rng));
                    h = std::max(2.0, h + 0.5 * sc.noise.bbox_jitter_px * gauss(rng));
                }
                const double conf = std::clamp(
                    sc.noise.confidence_mean + sc.noise.confidence_std * gauss(rng), 0.01, 1.0);
                Detection d;
                d.time = t_ms;
                d.camera.value = cam.id;
                d.bbox = {cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0};
                d.confidence = conf;
                d.class_label = sc.class_label;
                dets.push_back(std::move(d));
            }
            if (sc.noise.false_positive_rate_per_frame > 0.0) {
                std::poisson_distribution<int> fp_count(sc.noise.false_positive_rate_per_frame);
                const int n_fp = fp_count(rng);
                for (int f = 0; f < n_fp; ++f) {
                    const double cx = half_w + unit(rng) * (cam.image_w - 2.0 * half_w);
                    const double cy = cam.y_center + 3.0 * half_h * gauss(rng);
                    const double conf = std::clamp(
                        sc.noise.confidence_mean + sc.noise.confidence_std * gauss(rng), 0.01,
                        1.0);
                    Detection d;
                    d.time = t_ms;
                    d.camera.value = cam.id;
                    d.bbox = {cx - half_w, cy - half_h, cx + half_w, cy + half_h};
                    d.confidence = conf;
                    d.class_label = sc.class_label;
                    dets.push_back(std::move(d));
                }
            }
        }
    }
    if (sc.emit_per_frame_truth) {
        std::map<int, std::vector<PerFrameTruthFrame>> pft = out.truth_frames;
        led.per_frame_truth = std::move(pft);
    } else {
        out.truth_frames.clear();
    }

    // 5. motor sensor stream: accel magnitude 9.81 + N(0, sigma_state)
    for (std::int64_t j = 0;; ++j) {
        const double t_s = static_cast<double>(j) / sc.sensor.hz;
        if (t_s > sc.duration_s) break;
        const Timestamp t_ms = to_millis(t_s);
        const bool running = clock.running_at(t_s);
        const double sigma = running ? sc.sensor.sigma_run : sc.sensor.sigma_stop;
        SensorSample s;
        s.time = t_ms;
        s.accel = {0.0, 0.0, 9.81 + sigma * gauss(rng)};
        const double gs = running ? 2.0 : 0.02;
        s.gyro = std::array<double, 3>{gs * gauss(rng), gs * gauss(rng), gs * gauss(rng)};
        s.mag = std::array<double, 3>{20.0 + 0.5 * gauss(rng), 5.0 + 0.5 * gauss(rng),
                                      43.0 + 0.5 * gauss(rng)};
        if (sc.sensor.extended_channels) {
            s.pressure_hpa = 1013.25 + 0.05 * gauss(rng);
            s.temp_c = 22.0 + 0.02 * gauss(rng);
            s.humidity_rh = 45.0 + 0.1 * gauss(rng);
            s.co2_ppm = 600.0 + 2.0 * gauss(rng);
        }
        out.sensor.push_back(std::move(s));
    }

    led.validate();
    out.true_kpis = ledger_kpis(led, out.topology);
    return out;
}

// True per-minute and session KPIs from a ledger, via the engine's own kpi
// operations (shared code path, no reimplementation).
inline LedgerKpis true_kpis(const GroundTruthLedger& ledger, const LineTopology& topology) {
    return ledger_kpis(ledger, topology);
}

// Canned scenario reproducing the dense-packing failure: pieces fed faster
// than the ideal cycle, with the detector merging near-touching boxes, so the
// measured performance exceeds 1 while counts fall short of truth.
inline Scenario dense_packing_scenario() {
    Scenario sc;
    sc.duration_s = 480.0;
    sc.tick_hz = 30.0;
    sc.injection_period_s = 0.7;  // faster than tau_ideal
    sc.tau_ideal_s = 1.1;
    sc.defect_probability = 0.0;
    sc.rng_seed = 7;
    sc.noise.merge_enabled = true;
    sc.noise.merge_gap_frac = 0.7;
    sc.noise.bbox_jitter_px = 1.0;
    sc.noise.confidence_mean = 0.9;
    CameraSetup cam1;
    cam1.id = 1;
    cam1.px_per_m = 320.0;
    cam1.px_offset = 0.0;
    cam1.watches = {{1, 1}};
    CameraSetup cam2;
    cam2.id = 2;
    cam2.px_per_m = 320.0;
    cam2.px_offset = -640.0;
    cam2.watches = {{2, 1}};
    sc.cameras = {cam1, cam2};
    return sc;
}

// Writes detections/, sensor.csv, topology.json, ledger.json into `dir` --
// exactly the formats the readers accept.
inline void write_sim_output(const std::filesystem::path& dir, const SimOutput& out) {
    std::filesystem::create_directories(dir);
    write_detections_dir(dir / "detections", out.detections);
    write_sensor_csv(dir / "sensor.csv", out.sensor);
    save_topology(dir / "topology.json", out.topology);
    save_ledger(dir / "ledger.json", out.ledger);
}

// ---------------------------------------------------------------------------
// Scenario file I/O

inline Scenario scenario_from_json(const nlohmann::json& j) {
    Scenario sc;
    try {
        sc.duration_s = j.value("duration_s", sc.duration_s);
        sc.tick_hz = j.value("tick_hz", sc.tick_hz);
        sc.belt_speed_mps = j.value("belt_speed_mps", sc.belt_speed_mps);
        sc.injection_period_s = j.value("injection_period_s", sc.injection_period_s);
        sc.tau_ideal_s = j.value("tau_ideal_s", sc.tau_ideal_s);
        sc.defect_probability = j.value("defect_probability", sc.defect_probability);
        sc.drain_tail_s = j.value("drain_tail_s", sc.drain_tail_s);
        sc.piece_len_m = j.value("piece_len_m", sc.piece_len_m);
        sc.class_label = j.value("class", sc.class_label);
        sc.emit_per_frame_truth = j.value("emit_per_frame_truth", sc.emit_per_frame_truth);
        sc.rng_seed = j.value("rng_seed", sc.rng_seed);
        if (j.contains("line")) {
            const auto& l = j.at("line");
            sc.line.node1_m = l.value("node1_m", sc.line.node1_m);
            sc.line.node2_m = l.value("node2_m", sc.line.node2_m);
            sc.line.node3_m = l.value("node3_m", sc.line.node3_m);
            sc.line.wire_frac = l.value("wire_frac", sc.line.wire_frac);
            sc.line.wire_gap_m = l.value("wire_gap_m", sc.line.wire_gap_m);
        }
        if (j.contains("stops")) {
            const auto& s = j.at("stops");
            if (s.contains("explicit_s")) {
                for (const auto& iv : s.at("explicit_s"))
                    sc.stops.explicit_s.emplace_back(iv.at(0).get<double>(),
                                                     iv.at(1).get<double>());
            }
            if (s.contains("stochastic")) {
                StochasticStops st;
                st.mean_interval_s = s.at("stochastic").value("mean_interval_s", st.mean_interval_s);
                st.mean_duration_s = s.at("stochastic").value("mean_duration_s", st.mean_duration_s);
                st.min_duration_s = s.at("stochastic").value("min_duration_s", st.min_duration_s);
                sc.stops.stochastic = st;
            }
        }
        if (j.contains("noise")) {
            const auto& n = j.at("noise");
            sc.noise.miss_probability = n.value("miss_probability", sc.noise.miss_probability);
            sc.noise.bbox_jitter_px = n.value("bbox_jitter_px", sc.noise.bbox_jitter_px);
            sc.noise.false_positive_rate_per_frame =
                n.value("false_positive_rate_per_frame", sc.noise.false_positive_rate_per_frame);
            sc.noise.confidence_mean = n.value("confidence_mean", sc.noise.confidence_mean);
            sc.noise.confidence_std = n.value("confidence_std", sc.noise.confidence_std);
            sc.noise.merge_enabled = n.value("merge_enabled", sc.noise.merge_enabled);
            sc.noise.merge_gap_frac = n.value("merge_gap_frac", sc.noise.merge_gap_frac);
        }
        if (j.contains("sensor")) {
            const auto& s = j.at("sensor");
            sc.sensor.hz = s.value("hz", sc.sensor.hz);
            sc.sensor.sigma_run = s.value("sigma_run", sc.sensor.sigma_run);
            sc.sensor.sigma_stop = s.value("sigma_stop", sc.sensor.sigma_stop);
            sc.sensor.extended_channels = s.value("extended_channels", sc.sensor.extended_channels);
        }
        for (const auto& cj : j.value("cameras", nlohmann::json::array())) {
            CameraSetup cam;
            cam.id = cj.at("id").get<int>();
            if (cj.contains("fps")) cam.fps = cj.at("fps").get<double>();
            cam.px_per_m = cj.value("px_per_m", cam.px_per_m);
            cam.px_offset = cj.value("px_offset", cam.px_offset);
            cam.image_w = cj.value("image_w", cam.image_w);
            cam.image_h = cj.value("image_h", cam.image_h);
            cam.y_center = cj.value("y_center", cam.y_center);
            if (cj.contains("active_until_s"))
                cam.active_until_s = cj.at("active_until_s").get<double>();
            for (const auto& wj : cj.at("watches"))
                cam.watches.emplace_back(wj.at("edge").get<int>(), wj.at("priority").get<int>());
            sc.cameras.push_back(std::move(cam));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("scenario: ") + e.what());
    }
    sc.validate();
    return sc;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
    return scenario_from_json(detail::parse_json_file(path));
}

}  // namespace twinline
