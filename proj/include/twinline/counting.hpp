// Tripwire crossing detection over track trajectories, per-edge fusion of
// prioritized cameras into minute-binned count series, and belt speed from
// wire-pair transit times.
#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <tuple>
#include <vector>

#include "twinline/availability.hpp"
#include "twinline/core.hpp"
#include "twinline/ingest.hpp"
#include "twinline/tracker.hpp"

namespace twinline {

inline constexpr Timestamp kMinuteMs = 60'000;

// A track centroid passing a tripwire. Direction +1 is the production flow
// (by construction of the config), -1 is counter-flow. The timestamp is
// interpolated along the motion segment that crossed the wire.
struct CrossingEvent {
    Timestamp time = 0;
    int edge_id = 0;
    CameraId camera;
    int track_id = 0;
    int direction = 0;
    int wire_index = 0;  // 0 = counting wire, 1 = speed pair wire
};

struct CountingConfig {
    double refractory_s = 2.0;
};

// Detects crossings of every configured tripwire by every track. Snapshots
// must be time-ordered within each (camera, track) pair; a per
// (track, wire, direction) refractory window suppresses jitter re-crossings.
inline std::vector<CrossingEvent> detect_crossings(const std::vector<TrackSnapshot>& snapshots,
                                                   const LineTopology& topology,
                                                   const CountingConfig& cfg = {}) {
    struct WireRef {
        int edge_id;
        CameraId camera;
        const LineSegment2D* wire;
        int wire_index;
    };
    std::map<int, std::vector<WireRef>> wires_by_camera;
    for (const auto& e : topology.edges) {
        for (const auto& tw : e.tripwires) {
            wires_by_camera[tw.camera.value].push_back({e.id, tw.camera, &tw.wire_a, 0});
            if (tw.wire_b)
                wires_by_camera[tw.camera.value].push_back({e.id, tw.camera, &*tw.wire_b, 1});
        }
    }

    std::map<std::pair<int, int>, std::vector<const TrackSnapshot*>> by_track;
    for (const auto& s : snapshots) by_track[{s.camera.value, s.track_id}].push_back(&s);

    const Timestamp refractory_ms = to_millis(cfg.refractory_s);
    std::vector<CrossingEvent> out;
    for (const auto& [key, snaps] : by_track) {
        auto wit = wires_by_camera.find(key.first);
        if (wit == wires_by_camera.end()) continue;
        const auto& wires = wit->second;
        // last emission per (wire, direction); wires are few per camera
        std::map<std::tuple<const LineSegment2D*, int>, Timestamp> last_emit;
        for (std::size_t i = 1; i < snaps.size(); ++i) {
            const Point2D p0 = centroid(snaps[i - 1]->bbox);
            const Point2D p1 = centroid(snaps[i]->bbox);
            const Timestamp t0 = snaps[i - 1]->time;
            const Timestamp t1 = snaps[i]->time;
            for (const auto& w : wires) {
                const auto hit = segments_intersect(p0, p1, *w.wire);
                if (!hit) continue;
                const Timestamp tc =
                    t0 + static_cast<Timestamp>(std::llround(hit->param * static_cast<double>(t1 - t0)));
                const auto lk = std::make_tuple(w.wire, hit->sign);
                auto le = last_emit.find(lk);
                if (le != last_emit.end() && tc - le->second < refractory_ms) continue;
                last_emit[lk] = tc;
                out.push_back({tc, w.edge_id, w.camera, key.second, hit->sign, w.wire_index});
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const CrossingEvent& a, const CrossingEvent& b) {
        return std::tie(a.time, a.edge_id, a.camera.value, a.track_id, a.wire_index) <
               std::tie(b.time, b.edge_id, b.camera.value, b.track_id, b.wire_index);
    });
    return out;
}

// One reporting bin of an edge count series. `count` is absent on data-gap
// minutes (line running, no usable camera), which is distinct from zero.
struct MinuteCount {
    int minute = 0;
    std::optional<long> count;
    std::optional<CameraId> active_camera;
    bool data_gap = false;
};

struct EdgeCountSeries {
    int edge_id = 0;
    std::vector<MinuteCount> per_minute;
    std::vector<long> cumulative;  // carried forward across gaps

    long count_in(int m_begin, int m_end) const {
        long n = 0;
        for (const auto& mc : per_minute) {
            if (mc.minute >= m_begin && mc.minute < m_end && mc.count) n += *mc.count;
        }
        return n;
    }
};

// Which cameras produced at least one detection during each minute's running
// portion.
struct CameraLiveness {
    std::map<int, std::vector<char>> live;

    bool is_live(int camera, int minute) const {
        auto it = live.find(camera);
        if (it == live.end()) return false;
        const auto& v = it->second;
        return minute >= 0 && minute < static_cast<int>(v.size()) &&
               v[static_cast<std::size_t>(minute)] != 0;
    }
};

inline CameraLiveness compute_liveness(const DetectionStreams& dets, const RunStopSignal& signal,
                                       int n_minutes) {
    CameraLiveness out;
    for (const auto& [cam, stream] : dets.by_camera) {
        auto& v = out.live[cam];
        v.assign(static_cast<std::size_t>(n_minutes), 0);
        for (const auto& d : stream) {
            const int m = static_cast<int>(d.time / kMinuteMs);
            if (m >= 0 && m < n_minutes && signal.running_at(d.time)) v[static_cast<std::size_t>(m)] = 1;
        }
    }
    return out;
}

inline double running_seconds_in(const RunStopSignal& signal, Timestamp a, Timestamp b) {
    if (b <= a) return 0.0;
    double stopped = 0.0;
    for (const auto& ev : downtime_events(signal, a, b)) stopped += ev.duration_s();
    return to_seconds(b - a) - stopped;
}

// Selects, per minute, the highest-priority live camera for the edge and
// counts its flow-direction crossings of the counting wire. Minutes where the
// line ran but no camera was usable become data gaps; the cumulative series
// carries forward across them.
inline EdgeCountSeries fuse_edge_counts(const std::vector<CrossingEvent>& events,
                                        const EdgeDef& edge, const RunStopSignal& signal,
                                        const CameraLiveness& liveness, int n_minutes,
                                        Timestamp session_end) {
    std::vector<TripwireDef> prio = edge.tripwires;
    std::sort(prio.begin(), prio.end(),
              [](const TripwireDef& a, const TripwireDef& b) { return a.priority < b.priority; });

    // flow-direction counting-wire events per (camera, minute)
    std::map<int, std::map<int, long>> counts;
    for (const auto& ev : events) {
        if (ev.edge_id != edge.id || ev.direction != +1 || ev.wire_index != 0) continue;
        const int m = static_cast<int>(ev.time / kMinuteMs);
        if (m >= 0 && m < n_minutes) ++counts[ev.camera.value][m];
    }

    EdgeCountSeries out;
    out.edge_id = edge.id;
    long running_total = 0;
    for (int m = 0; m < n_minutes; ++m) {
        const Timestamp a = static_cast<Timestamp>(m) * kMinuteMs;
        const Timestamp b = std::min(a + kMinuteMs, session_end);
        const bool fully_stopped = running_seconds_in(signal, a, b) <= 0.0;

        MinuteCount mc;
        mc.minute = m;
        const TripwireDef* chosen = nullptr;
        for (const auto& tw : prio) {
            if (liveness.is_live(tw.camera.value, m) || fully_stopped) {
                chosen = &tw;
                break;
            }
        }
        if (chosen) {
            mc.active_camera = chosen->camera;
            long c = 0;
            auto cit = counts.find(chosen->camera.value);
            if (cit != counts.end()) {
                auto mit = cit->second.find(m);
                if (mit != cit->second.end()) c = mit->second;
            }
            mc.count = c;
            running_total += c;
        } else {
            mc.data_gap = true;
        }
        out.per_minute.push_back(mc);
        out.cumulative.push_back(running_total);
    }
    return out;
}

// Per-minute median belt speed from wire-pair transits (same track crossing
// wire 0 then wire 1 in the same direction).
struct SpeedEstimate {
    std::vector<std::optional<double>> median_mps;  // per minute
    std::vector<int> samples;                       // per minute
    std::optional<std::string> absent_reason;
};

inline SpeedEstimate estimate_speed(const std::vector<CrossingEvent>& events, const EdgeDef& edge,
                                    int n_minutes) {
    SpeedEstimate out;
    out.median_mps.assign(static_cast<std::size_t>(n_minutes), std::nullopt);
    out.samples.assign(static_cast<std::size_t>(n_minutes), 0);

    std::map<int, double> gap_by_camera;
    for (const auto& tw : edge.tripwires) {
        if (tw.wire_b && tw.gap_m) gap_by_camera[tw.camera.value] = *tw.gap_m;
    }
    if (gap_by_camera.empty()) {
        out.absent_reason = "edge " + std::to_string(edge.id) + " defines no tripwire pair";
        return out;
    }

    std::map<std::pair<int, int>, std::vector<const CrossingEvent*>> by_track;
    for (const auto& ev : events) {
        if (ev.edge_id != edge.id) continue;
        if (!gap_by_camera.count(ev.camera.value)) continue;
        by_track[{ev.camera.value, ev.track_id}].push_back(&ev);
    }

    std::vector<std::vector<double>> samples_by_minute(static_cast<std::size_t>(n_minutes));
    for (const auto& [key, evs] : by_track) {
        const double gap = gap_by_camera.at(key.first);
        const CrossingEvent* first_wire = nullptr;
        for (const auto* ev : evs) {
            if (ev->wire_index == 0) {
                first_wire = ev;
            } else if (first_wire && ev->direction == first_wire->direction &&
                       ev->time > first_wire->time) {
                const double dt = to_seconds(ev->time - first_wire->time);
                const int m = static_cast<int>(ev->time / kMinuteMs);
                if (dt > 0.0 && m >= 0 && m < n_minutes)
                    samples_by_minute[static_cast<std::size_t>(m)].push_back(gap / dt);
                first_wire = nullptr;
            }
        }
    }
    for (int m = 0; m < n_minutes; ++m) {
        auto& v = samples_by_minute[static_cast<std::size_t>(m)];
        out.samples[static_cast<std::size_t>(m)] = static_cast<int>(v.size());
        if (v.empty()) continue;
        std::sort(v.begin(), v.end());
        const std::size_t n = v.size();
        out.median_mps[static_cast<std::size_t>(m)] =
            n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
    }
    return out;
}

// Per-minute rate in pieces/min: the trailing-window mean of available counts.
// A data-gap minute has no rate regardless of the window.
inline std::vector<std::optional<double>> throughput(const EdgeCountSeries& series,
                                                     int window_minutes = 1) {
    if (window_minutes < 1) throw ContractViolation("throughput: window must be >= 1");
    const int n = static_cast<int>(series.per_minute.size());
    std::vector<std::optional<double>> out(static_cast<std::size_t>(n));
    for (int m = 0; m < n; ++m) {
        if (!series.per_minute[static_cast<std::size_t>(m)].count) continue;
        double sum = 0.0;
        int k = 0;
        for (int q = std::max(0, m - window_minutes + 1); q <= m; ++q) {
            const auto& mc = series.per_minute[static_cast<std::size_t>(q)];
            if (mc.count) {
                sum += static_cast<double>(*mc.count);
                ++k;
            }
        }
        if (k > 0) out[static_cast<std::size_t>(m)] = sum / static_cast<double>(k);
    }
    return out;
}

// Line-delimited dump of crossing events for plotting and golden tests.
inline void write_crossings_jsonl(const std::filesystem::path& path,
                                  const std::vector<CrossingEvent>& events) {
    std::string buf;
    buf.reserve(events.size() * 72);
    for (const auto& ev : events) {
        buf += "{\"t_ms\":";
        detail::append_int(buf, ev.time);
        buf += ",\"edge\":";
        detail::append_int(buf, ev.edge_id);
        buf += ",\"cam\":";
        detail::append_int(buf, ev.camera.value);
        buf += ",\"track\":";
        detail::append_int(buf, ev.track_id);
        buf += ",\"dir\":";
        detail::append_int(buf, ev.direction);
        buf += ",\"wire\":";
        detail::append_int(buf, ev.wire_index);
        buf += "}\n";
    }
    detail::write_text_file(path, buf);
}

}  // namespace twinline
