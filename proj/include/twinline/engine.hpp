// Replay pipeline: detections + sensor stream + topology in, tracked
// trajectories, crossing events, fused counts, availability, and the KPI
// report out. Also owns the report document formats (JSON + per-minute CSV)
// and the optional track dump.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "twinline/availability.hpp"
#include "twinline/core.hpp"
#include "twinline/counting.hpp"
#include "twinline/ingest.hpp"
#include "twinline/kpi.hpp"
#include "twinline/tracker.hpp"

namespace twinline {

struct EngineConfig {
    TrackerConfig tracker;
    CountingConfig counting;
    AvailabilityConfig availability;
    double frame_epsilon_ms = 1.0;  // detections this close share a frame
    int throughput_window_min = 1;
    int rolling_mean_k = 5;
};

struct ReplayInputs {
    DetectionStreams detections;
    std::vector<SensorSample> sensors;
    LineTopology topology;
    std::optional<GroundTruthLedger> ledger;
};

struct ReplayResult {
    Timestamp session_end = 0;
    int n_minutes = 0;
    RunStopSignal signal;
    std::vector<DowntimeEvent> downtime;
    std::map<int, std::vector<TrackSnapshot>> snapshots_by_camera;
    std::vector<CrossingEvent> crossings;
    std::map<int, EdgeCountSeries> edge_series;
    std::map<int, SpeedEstimate> speed_by_edge;
    std::vector<std::optional<double>> throughput_per_min;  // first edge
    std::vector<MinuteKpi> minutes;
    OeeBreakdown session;
    bool any_data_gap = false;
    bool availability_from_ledger = false;

    const EdgeCountSeries& first_edge() const { return edge_series.begin()->second; }
    const EdgeCountSeries& last_edge() const { return edge_series.rbegin()->second; }
};

// Groups a camera's time-sorted detections into frames (same timestamp up to
// epsilon) and feeds them through a tracker instance.
inline std::vector<TrackSnapshot> track_camera(int camera_id,
                                               const std::vector<Detection>& dets,
                                               const TrackerConfig& cfg, double epsilon_ms) {
    CameraTracker tracker(CameraId{camera_id}, cfg);
    std::vector<TrackSnapshot> out;
    std::size_t i = 0;
    while (i < dets.size()) {
        const Timestamp frame_time = dets[i].time;
        std::size_t j = i;
        while (j < dets.size() &&
               static_cast<double>(dets[j].time - frame_time) <= epsilon_ms)
            ++j;
        const std::vector<Detection> frame(dets.begin() + static_cast<std::ptrdiff_t>(i),
                                           dets.begin() + static_cast<std::ptrdiff_t>(j));
        auto snaps = tracker.step(frame_time, frame);
        out.insert(out.end(), snaps.begin(), snaps.end());
        i = j;
    }
    return out;
}

inline ReplayResult run_replay(const ReplayInputs& in, const EngineConfig& cfg = {}) {
    in.topology.validate();
    ReplayResult res;

    // session span: operator-planned when configured, else last observed event
    Timestamp max_event = 0;
    for (const auto& [cam, dets] : in.detections.by_camera)
        if (!dets.empty()) max_event = std::max(max_event, dets.back().time);
    if (!in.sensors.empty()) max_event = std::max(max_event, in.sensors.back().time);
    if (in.ledger) max_event = std::max(max_event, in.ledger->session_end);
    res.session_end = in.topology.planned_production_time_s
                          ? to_millis(*in.topology.planned_production_time_s)
                          : max_event;
    if (res.session_end <= 0) throw ValidationError("replay: empty session (no events)");
    res.n_minutes = static_cast<int>((res.session_end + kMinuteMs - 1) / kMinuteMs);

    // availability: classify sensors when present, else fall back to the ledger
    if (!in.sensors.empty()) {
        res.signal = classify_run_stop(in.sensors, cfg.availability);
    } else if (in.ledger) {
        res.signal = signal_from_stop_intervals(in.ledger->stop_intervals, 0, res.session_end);
        res.availability_from_ledger = true;
    } else {
        throw ValidationError("replay: no availability source (need sensor data or a ledger)");
    }
    res.downtime = downtime_events(res.signal, 0, res.session_end);

    // per-camera tracking (instances are independent)
    for (const auto& [cam, dets] : in.detections.by_camera) {
        res.snapshots_by_camera[cam] =
            track_camera(cam, dets, cfg.tracker, cfg.frame_epsilon_ms);
    }

    std::vector<TrackSnapshot> all_snaps;
    for (const auto& [cam, snaps] : res.snapshots_by_camera)
        all_snaps.insert(all_snaps.end(), snaps.begin(), snaps.end());
    res.crossings = detect_crossings(all_snaps, in.topology, cfg.counting);

    const CameraLiveness liveness = compute_liveness(in.detections, res.signal, res.n_minutes);
    for (const auto& e : in.topology.edges) {
        res.edge_series[e.id] = fuse_edge_counts(res.crossings, e, res.signal, liveness,
                                                 res.n_minutes, res.session_end);
        res.speed_by_edge[e.id] = estimate_speed(res.crossings, e, res.n_minutes);
        for (const auto& mc : res.edge_series[e.id].per_minute)
            if (mc.data_gap) res.any_data_gap = true;
    }

    const EdgeCountSeries& e1 = res.first_edge();
    const EdgeCountSeries& e2 = res.last_edge();
    res.throughput_per_min = throughput(e1, cfg.throughput_window_min);
    const SpeedEstimate* speed = nullptr;
    for (const auto& [eid, sp] : res.speed_by_edge) {
        if (!sp.absent_reason) {
            speed = &sp;
            break;
        }
    }
    res.minutes = build_minute_kpis(e1, e2, res.downtime, in.topology.ideal_cycle_time_s,
                                    res.session_end, speed, &res.throughput_per_min);
    const double planned =
        in.topology.planned_production_time_s.value_or(to_seconds(res.session_end));
    res.session = build_session_kpi(e1, e2, res.downtime, in.topology.ideal_cycle_time_s, planned);
    return res;
}

// ---------------------------------------------------------------------------
// Report document

namespace detail {

inline nlohmann::ordered_json opt_num(const std::optional<double>& v) {
    if (v) return *v;
    return nullptr;
}

inline std::optional<double> num_opt(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

}  // namespace detail

inline nlohmann::ordered_json breakdown_to_json(const OeeBreakdown& b) {
    nlohmann::ordered_json j;
    j["availability"] = b.availability;
    j["performance"] = detail::opt_num(b.performance);
    j["performance_clamped"] = detail::opt_num(b.performance_clamped);
    j["quality"] = b.quality;
    j["oee"] = detail::opt_num(b.oee);
    j["t_planned_s"] = b.t_planned_s;
    j["t_operating_s"] = b.t_operating_s;
    j["t_downtime_s"] = b.t_downtime_s;
    j["tau_ideal_s"] = b.tau_ideal_s;
    j["q_good"] = b.counts.q_good;
    j["q_bad"] = b.counts.q_bad;
    j["q_total"] = b.counts.q_total;
    j["count_imbalance"] = b.counts.imbalance;
    j["performance_anomalous"] = b.performance_anomalous;
    if (b.performance_absent_reason) j["performance_absent_reason"] = *b.performance_absent_reason;
    return j;
}

inline OeeBreakdown breakdown_from_json(const nlohmann::json& j) {
    OeeBreakdown b;
    b.availability = j.at("availability").get<double>();
    b.performance = detail::num_opt(j, "performance");
    b.performance_clamped = detail::num_opt(j, "performance_clamped");
    b.quality = j.at("quality").get<double>();
    b.oee = detail::num_opt(j, "oee");
    b.t_planned_s = j.at("t_planned_s").get<double>();
    b.t_operating_s = j.at("t_operating_s").get<double>();
    b.t_downtime_s = j.at("t_downtime_s").get<double>();
    b.tau_ideal_s = j.at("tau_ideal_s").get<double>();
    b.counts.q_good = j.at("q_good").get<long>();
    b.counts.q_bad = j.at("q_bad").get<long>();
    b.counts.q_total = j.at("q_total").get<long>();
    b.counts.imbalance = j.value("count_imbalance", false);
    b.performance_anomalous = j.value("performance_anomalous", false);
    if (j.contains("performance_absent_reason"))
        b.performance_absent_reason = j.at("performance_absent_reason").get<std::string>();
    return b;
}

// The subset of a replay a report file carries; enough to re-evaluate against
// a ledger later.
struct Report {
    Timestamp session_end = 0;
    OeeBreakdown session;
    std::vector<MinuteKpi> minutes;
    std::map<int, EdgeCountSeries> edge_series;
    bool any_data_gap = false;
    bool availability_from_ledger = false;
};

inline Report make_report(const ReplayResult& res) {
    Report r;
    r.session_end = res.session_end;
    r.session = res.session;
    r.minutes = res.minutes;
    r.edge_series = res.edge_series;
    r.any_data_gap = res.any_data_gap;
    r.availability_from_ledger = res.availability_from_ledger;
    return r;
}

inline nlohmann::ordered_json report_to_json(const Report& r) {
    nlohmann::ordered_json j;
    j["session_ms"] = r.session_end;
    j["availability_source"] = r.availability_from_ledger ? "ledger" : "sensor";
    j["any_data_gap"] = r.any_data_gap;
    j["session"] = breakdown_to_json(r.session);
    j["edges"] = nlohmann::ordered_json::object();
    for (const auto& [eid, series] : r.edge_series) {
        nlohmann::ordered_json ej;
        auto counts = nlohmann::ordered_json::array();
        auto cams = nlohmann::ordered_json::array();
        auto cum = nlohmann::ordered_json::array();
        auto gaps = nlohmann::ordered_json::array();
        for (std::size_t m = 0; m < series.per_minute.size(); ++m) {
            const auto& mc = series.per_minute[m];
            counts.push_back(mc.count ? nlohmann::ordered_json(*mc.count)
                                      : nlohmann::ordered_json(nullptr));
            cams.push_back(mc.active_camera ? mc.active_camera->value : 0);
            cum.push_back(series.cumulative[m]);
            gaps.push_back(mc.data_gap);
        }
        ej["counts"] = std::move(counts);
        ej["cumulative"] = std::move(cum);
        ej["camera"] = std::move(cams);
        ej["data_gap"] = std::move(gaps);
        j["edges"][std::to_string(eid)] = std::move(ej);
    }
    j["minutes"] = nlohmann::ordered_json::array();
    for (const auto& row : r.minutes) {
        nlohmann::ordered_json mj;
        mj["minute"] = row.minute;
        mj["duration_s"] = row.duration_s;
        mj["partial"] = row.partial;
        mj["data_gap"] = row.data_gap;
        mj["speed_mps"] = detail::opt_num(row.speed_mps);
        mj["throughput_per_min"] = detail::opt_num(row.throughput_per_min);
        mj["kpi"] = breakdown_to_json(row.breakdown);
        j["minutes"].push_back(std::move(mj));
    }
    return j;
}

inline Report report_from_json(const nlohmann::json& j) {
    Report r;
    try {
        r.session_end = j.at("session_ms").get<std::int64_t>();
        r.availability_from_ledger = j.value("availability_source", "sensor") == std::string("ledger");
        r.any_data_gap = j.value("any_data_gap", false);
        r.session = breakdown_from_json(j.at("session"));
        for (const auto& [key, ej] : j.at("edges").items()) {
            EdgeCountSeries s;
            s.edge_id = std::stoi(key);
            const auto& counts = ej.at("counts");
            const auto& cum = ej.at("cumulative");
            const auto& cams = ej.at("camera");
            const auto& gaps = ej.at("data_gap");
            for (std::size_t m = 0; m < counts.size(); ++m) {
                MinuteCount mc;
                mc.minute = static_cast<int>(m);
                if (!counts[m].is_null()) mc.count = counts[m].get<long>();
                const int cam = cams[m].get<int>();
                if (cam > 0) mc.active_camera = CameraId{cam};
                mc.data_gap = gaps[m].get<bool>();
                s.per_minute.push_back(mc);
                s.cumulative.push_back(cum[m].get<long>());
            }
            r.edge_series[s.edge_id] = std::move(s);
        }
        for (const auto& mj : j.at("minutes")) {
            MinuteKpi row;
            row.minute = mj.at("minute").get<int>();
            row.duration_s = mj.at("duration_s").get<double>();
            row.partial = mj.at("partial").get<bool>();
            row.data_gap = mj.at("data_gap").get<bool>();
            row.speed_mps = detail::num_opt(mj, "speed_mps");
            row.throughput_per_min = detail::num_opt(mj, "throughput_per_min");
            row.breakdown = breakdown_from_json(mj.at("kpi"));
            r.minutes.push_back(std::move(row));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("report: ") + e.what());
    }
    return r;
}

inline void save_report_json(const std::filesystem::path& path, const Report& r) {
    detail::write_text_file(path, report_to_json(r).dump(2) + "\n");
}

inline Report load_report(const std::filesystem::path& path) {
    return report_from_json(detail::parse_json_file(path));
}

// Per-minute CSV for external plotting. Ratios at full precision; absent
// values as empty cells.
inline void write_report_csv(const std::filesystem::path& path, const Report& r,
                             int rolling_k = 5) {
    std::string buf = "minute,duration_s,partial";
    std::vector<int> edge_ids;
    for (const auto& [eid, s] : r.edge_series) edge_ids.push_back(eid);
    for (int eid : edge_ids) {
        const std::string e = std::to_string(eid);
        buf += ",count_e" + e + ",cum_e" + e + ",camera_e" + e + ",data_gap_e" + e;
    }
    buf += ",downtime_s,availability,performance,performance_clamped,quality,oee,oee_smooth";
    buf += ",speed_mps,throughput_per_min,anomalous\n";

    std::vector<std::optional<double>> oee_series;
    for (const auto& row : r.minutes) oee_series.push_back(row.breakdown.oee);
    const auto oee_smooth = rolling_mean(oee_series, rolling_k);

    auto put_opt = [&](const std::optional<double>& v) {
        buf.push_back(',');
        if (v) detail::append_double(buf, *v);
    };
    for (std::size_t m = 0; m < r.minutes.size(); ++m) {
        const auto& row = r.minutes[m];
        detail::append_int(buf, row.minute);
        buf.push_back(',');
        detail::append_double(buf, row.duration_s);
        buf += row.partial ? ",1" : ",0";
        for (int eid : edge_ids) {
            const auto& s = r.edge_series.at(eid);
            const auto& mc = s.per_minute[m];
            buf.push_back(',');
            if (mc.count) detail::append_int(buf, *mc.count);
            buf.push_back(',');
            detail::append_int(buf, s.cumulative[m]);
            buf.push_back(',');
            if (mc.active_camera) detail::append_int(buf, mc.active_camera->value);
            buf += mc.data_gap ? ",1" : ",0";
        }
        buf.push_back(',');
        detail::append_double(buf, row.breakdown.t_downtime_s);
        buf.push_back(',');
        detail::append_double(buf, row.breakdown.availability);
        put_opt(row.breakdown.performance);
        put_opt(row.breakdown.performance_clamped);
        buf.push_back(',');
        detail::append_double(buf, row.breakdown.quality);
        put_opt(row.breakdown.oee);
        put_opt(oee_smooth[m]);
        put_opt(row.speed_mps);
        put_opt(row.throughput_per_min);
        buf += row.breakdown.performance_anomalous ? ",1" : ",0";
        buf.push_back('\n');
    }
    detail::write_text_file(path, buf);
}

// Per-minute evaluation CSV mirroring the count/accuracy/OEE comparison plots.
inline void write_eval_csv(const std::filesystem::path& path, const EvalSeries& eval) {
    std::vector<int> edge_ids;
    if (!eval.minutes.empty())
        for (const auto& [eid, v] : eval.minutes.front().pred_cum) edge_ids.push_back(eid);
    std::string buf = "minute";
    for (int eid : edge_ids) {
        const std::string e = std::to_string(eid);
        buf += ",pred_cum_e" + e + ",truth_cum_e" + e + ",count_err_pct_e" + e;
    }
    buf += ",accuracy_pct,pred_oee,truth_oee,oee_err_abs\n";
    auto put_opt = [&](const std::optional<double>& v) {
        buf.push_back(',');
        if (v) detail::append_double(buf, *v);
    };
    for (const auto& em : eval.minutes) {
        detail::append_int(buf, em.minute);
        for (int eid : edge_ids) {
            buf.push_back(',');
            detail::append_int(buf, em.pred_cum.at(eid));
            buf.push_back(',');
            detail::append_int(buf, em.truth_cum.at(eid));
            buf.push_back(',');
            detail::append_double(buf, 100.0 * em.count_err.at(eid));
        }
        put_opt(em.accuracy_pct);
        put_opt(em.pred_oee);
        put_opt(em.truth_oee);
        put_opt(em.oee_err);
        buf.push_back('\n');
    }
    detail::write_text_file(path, buf);
}

// ---------------------------------------------------------------------------
// Track dump (detection line format plus track_id and status)

inline void write_tracks_jsonl(const std::filesystem::path& path,
                               const std::map<int, std::vector<TrackSnapshot>>& by_camera) {
    std::string buf;
    for (const auto& [cam, snaps] : by_camera) {
        for (const auto& s : snaps) {
            buf += "{\"t_ms\":";
            detail::append_int(buf, s.time);
            buf += ",\"cam\":";
            detail::append_int(buf, s.camera.value);
            buf += ",\"bbox\":[";
            detail::append_double(buf, s.bbox.x_min);
            buf.push_back(',');
            detail::append_double(buf, s.bbox.y_min);
            buf.push_back(',');
            detail::append_double(buf, s.bbox.x_max);
            buf.push_back(',');
            detail::append_double(buf, s.bbox.y_max);
            buf += "],\"conf\":";
            detail::append_double(buf, s.confidence);
            buf += ",\"track_id\":";
            detail::append_int(buf, s.track_id);
            buf += ",\"status\":\"";
            buf += to_string(s.status);
            buf += "\"}\n";
        }
    }
    detail::write_text_file(path, buf);
}

inline std::map<int, std::vector<TrackSnapshot>> read_tracks_jsonl(
    const std::filesystem::path& path) {
    std::map<int, std::vector<TrackSnapshot>> out;
    auto in = detail::open_or_throw(path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) detail::fail_parse(path, line_no, "malformed track record");
        try {
            TrackSnapshot s;
            s.time = j.at("t_ms").get<std::int64_t>();
            s.camera.value = j.at("cam").get<int>();
            const auto& bb = j.at("bbox");
            s.bbox = {bb.at(0).get<double>(), bb.at(1).get<double>(), bb.at(2).get<double>(),
                      bb.at(3).get<double>()};
            s.confidence = j.value("conf", 0.0);
            s.track_id = j.at("track_id").get<int>();
            const std::string st = j.value("status", "confirmed");
            s.status = st == "tentative" ? TrackStatus::tentative
                       : st == "lost"    ? TrackStatus::lost
                                         : TrackStatus::confirmed;
            out[s.camera.value].push_back(std::move(s));
        } catch (const nlohmann::json::exception& e) {
            detail::fail_parse(path, line_no, e.what());
        }
    }
    return out;
}

}  // namespace twinline
