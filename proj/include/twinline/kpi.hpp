// The KPI stack over minute bins and the full session: downtime, piece
// counts, availability, performance, quality, OEE, and evaluation against a
// ground-truth ledger.
//
// Identities maintained exactly: t_operating = t_planned - t_downtime,
// q_total = q_good + q_bad, oee = A * P * Q.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "twinline/assignment.hpp"
#include "twinline/availability.hpp"
#include "twinline/core.hpp"
#include "twinline/counting.hpp"
#include "twinline/ingest.hpp"
#include "twinline/tracker.hpp"

namespace twinline {

struct PieceCounts {
    long q_good = 0;
    long q_bad = 0;
    long q_total = 0;
    // set when in-transit pieces make good > total transiently; q_good is
    // then clamped so the identity q_total == q_good + q_bad holds
    bool imbalance = false;
};

// q_total from the pre-QA edge, q_good from the post-QA edge, over minute
// window [m_begin, m_end).
inline PieceCounts piece_counts(const EdgeCountSeries& edge1, const EdgeCountSeries& edge2,
                                int m_begin, int m_end) {
    PieceCounts pc;
    pc.q_total = edge1.count_in(m_begin, m_end);
    const long raw_good = edge2.count_in(m_begin, m_end);
    pc.q_good = std::min(raw_good, pc.q_total);
    pc.imbalance = raw_good > pc.q_total;
    pc.q_bad = pc.q_total - pc.q_good;
    return pc;
}

// A = (t_planned - t_downtime) / t_planned.
inline double availability_ratio(double t_planned_s, double t_downtime_s) {
    if (!(t_planned_s > 0.0)) throw ContractViolation("availability: t_planned must be > 0");
    if (t_downtime_s < 0.0 || t_downtime_s > t_planned_s)
        throw ContractViolation("availability: need 0 <= t_downtime <= t_planned");
    return (t_planned_s - t_downtime_s) / t_planned_s;
}

// P = tau_ideal * q_total / t_operating. Values above 1 are legitimate
// (dense packing inflates the apparent rate) and are flagged by the caller.
// Absent when there is no operating time.
inline std::optional<double> performance_ratio(double tau_ideal_s, long q_total,
                                               double t_operating_s) {
    if (!(tau_ideal_s > 0.0)) throw ContractViolation("performance: tau_ideal must be > 0");
    if (t_operating_s < 0.0) throw ContractViolation("performance: t_operating must be >= 0");
    if (q_total < 0) throw ContractViolation("performance: q_total must be >= 0");
    if (t_operating_s == 0.0) return std::nullopt;
    return tau_ideal_s * static_cast<double>(q_total) / t_operating_s;
}

// Q = q_good / q_total; defined as 1.0 on an empty window (no evidence of
// defects; callers can distinguish via the counts themselves).
inline double quality_ratio(const PieceCounts& counts) {
    if (counts.q_total == 0) return 1.0;
    return static_cast<double>(counts.q_good) / static_cast<double>(counts.q_total);
}

inline double oee(double availability, double performance, double quality) {
    return availability * performance * quality;
}

struct OeeBreakdown {
    double availability = 1.0;
    std::optional<double> performance;
    double quality = 1.0;
    std::optional<double> oee;
    std::optional<double> performance_clamped;  // min(P, 1)
    bool performance_anomalous = false;         // P > 1 observed
    std::optional<std::string> performance_absent_reason;
    double t_planned_s = 0.0;
    double t_operating_s = 0.0;
    double t_downtime_s = 0.0;
    double tau_ideal_s = 0.0;
    PieceCounts counts;
};

inline OeeBreakdown compute_oee(double t_planned_s, double t_downtime_s, double tau_ideal_s,
                                const PieceCounts& counts) {
    OeeBreakdown b;
    b.t_planned_s = t_planned_s;
    b.t_downtime_s = t_downtime_s;
    b.t_operating_s = t_planned_s - t_downtime_s;
    b.tau_ideal_s = tau_ideal_s;
    b.counts = counts;
    b.availability = availability_ratio(t_planned_s, t_downtime_s);
    b.performance = performance_ratio(tau_ideal_s, counts.q_total, b.t_operating_s);
    b.quality = quality_ratio(counts);
    if (b.performance) {
        b.oee = b.availability * *b.performance * b.quality;
        b.performance_clamped = std::min(*b.performance, 1.0);
        b.performance_anomalous = *b.performance > 1.0;
    } else {
        b.performance_absent_reason = "no operating time";
    }
    return b;
}

// Centered k-point rolling mean (k odd); absent values are excluded from the
// window mean and edge bins use the available sub-window. A bin stays absent
// only when its whole window is absent.
inline std::vector<std::optional<double>> rolling_mean(
    const std::vector<std::optional<double>>& series, int k) {
    if (k < 1 || k % 2 == 0) throw ContractViolation("rolling_mean: k must be odd and >= 1");
    const int n = static_cast<int>(series.size());
    const int half = k / 2;
    std::vector<std::optional<double>> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double sum = 0.0;
        int cnt = 0;
        for (int j = std::max(0, i - half); j <= std::min(n - 1, i + half); ++j) {
            if (series[static_cast<std::size_t>(j)]) {
                sum += *series[static_cast<std::size_t>(j)];
                ++cnt;
            }
        }
        if (cnt > 0) out[static_cast<std::size_t>(i)] = sum / static_cast<double>(cnt);
    }
    return out;
}

// One reporting row. Fully stopped minutes have A = 0 and no P/OEE.
struct MinuteKpi {
    int minute = 0;
    double duration_s = 60.0;
    bool partial = false;
    OeeBreakdown breakdown;
    std::optional<double> speed_mps;
    std::optional<double> throughput_per_min;
    bool data_gap = false;
};

inline double downtime_seconds_in(const std::vector<DowntimeEvent>& events, Timestamp a,
                                  Timestamp b) {
    double s = 0.0;
    for (const auto& ev : events) {
        const Timestamp lo = std::max(ev.t_stop, a);
        const Timestamp hi = std::min(ev.t_start, b);
        if (lo < hi) s += to_seconds(hi - lo);
    }
    return s;
}

// Minute-level KPI table. Per-minute OEE uses that minute's A, P, Q.
inline std::vector<MinuteKpi> build_minute_kpis(const EdgeCountSeries& edge1,
                                                const EdgeCountSeries& edge2,
                                                const std::vector<DowntimeEvent>& downtime,
                                                double tau_ideal_s, Timestamp session_end,
                                                const SpeedEstimate* speed = nullptr,
                                                const std::vector<std::optional<double>>* rate =
                                                    nullptr) {
    const int n_minutes = static_cast<int>(edge1.per_minute.size());
    std::vector<MinuteKpi> out;
    out.reserve(static_cast<std::size_t>(n_minutes));
    for (int m = 0; m < n_minutes; ++m) {
        const Timestamp a = static_cast<Timestamp>(m) * kMinuteMs;
        const Timestamp b = std::min(a + kMinuteMs, session_end);
        MinuteKpi row;
        row.minute = m;
        row.duration_s = to_seconds(b - a);
        row.partial = b - a < kMinuteMs;
        const double down = std::min(downtime_seconds_in(downtime, a, b), row.duration_s);
        const PieceCounts pc = piece_counts(edge1, edge2, m, m + 1);
        row.breakdown = compute_oee(row.duration_s, down, tau_ideal_s, pc);
        const auto& mc1 = edge1.per_minute[static_cast<std::size_t>(m)];
        const auto& mc2 = edge2.per_minute[static_cast<std::size_t>(m)];
        row.data_gap = mc1.data_gap || mc2.data_gap;
        if (speed && m < static_cast<int>(speed->median_mps.size()))
            row.speed_mps = speed->median_mps[static_cast<std::size_t>(m)];
        if (rate && m < static_cast<int>(rate->size()))
            row.throughput_per_min = (*rate)[static_cast<std::size_t>(m)];
        out.push_back(std::move(row));
    }
    return out;
}

// Session KPI from session totals (not the mean of minute OEEs).
inline OeeBreakdown build_session_kpi(const EdgeCountSeries& edge1, const EdgeCountSeries& edge2,
                                      const std::vector<DowntimeEvent>& downtime,
                                      double tau_ideal_s, double t_planned_s) {
    const int n_minutes = static_cast<int>(edge1.per_minute.size());
    const double down =
        std::min(downtime_seconds_in(downtime, 0, to_millis(t_planned_s)), t_planned_s);
    return compute_oee(t_planned_s, down, tau_ideal_s, piece_counts(edge1, edge2, 0, n_minutes));
}

// ---------------------------------------------------------------------------
// KPI series computed straight from a ground-truth ledger (the same code path
// the engine uses, fed with true quantities).

struct LedgerKpis {
    std::map<int, EdgeCountSeries> edge_series;
    std::vector<DowntimeEvent> downtime;
    std::vector<MinuteKpi> minutes;
    OeeBreakdown session;
    RunStopSignal signal;
};

inline RunStopSignal signal_from_stop_intervals(
    const std::vector<std::pair<Timestamp, Timestamp>>& stops, Timestamp t0, Timestamp t1) {
    RunStopSignal sig;
    sig.t0 = t0;
    sig.t1 = t1;
    int init = 1;
    for (const auto& [s, e] : stops) {
        if (s <= t0 && t0 < e) init = 0;
    }
    sig.changes.emplace_back(t0, init);
    for (const auto& [s, e] : stops) {
        if (e <= t0 || s >= t1) continue;
        if (s > t0 && sig.changes.back().second == 1) sig.changes.emplace_back(s, 0);
        if (e < t1 && sig.changes.back().second == 0) sig.changes.emplace_back(e, 1);
    }
    return sig;
}

inline LedgerKpis ledger_kpis(const GroundTruthLedger& ledger, const LineTopology& topology) {
    LedgerKpis out;
    const Timestamp session_end = ledger.session_end;
    const int n_minutes = static_cast<int>((session_end + kMinuteMs - 1) / kMinuteMs);

    out.signal = signal_from_stop_intervals(ledger.stop_intervals, 0, session_end);
    out.downtime = downtime_events(out.signal, 0, session_end);

    for (const auto& e : topology.edges) {
        EdgeCountSeries s;
        s.edge_id = e.id;
        std::vector<long> counts(static_cast<std::size_t>(n_minutes), 0);
        auto it = ledger.edge_crossings.find(e.id);
        if (it != ledger.edge_crossings.end()) {
            for (const auto& [t, piece] : it->second) {
                const int m = static_cast<int>(t / kMinuteMs);
                if (m >= 0 && m < n_minutes) ++counts[static_cast<std::size_t>(m)];
            }
        }
        long total = 0;
        for (int m = 0; m < n_minutes; ++m) {
            total += counts[static_cast<std::size_t>(m)];
            s.per_minute.push_back({m, counts[static_cast<std::size_t>(m)], std::nullopt, false});
            s.cumulative.push_back(total);
        }
        out.edge_series[e.id] = std::move(s);
    }

    const EdgeCountSeries& e1 = out.edge_series.begin()->second;
    const EdgeCountSeries& e2 = out.edge_series.rbegin()->second;
    out.minutes =
        build_minute_kpis(e1, e2, out.downtime, topology.ideal_cycle_time_s, session_end);
    const double planned = topology.planned_production_time_s.value_or(to_seconds(session_end));
    out.session = build_session_kpi(e1, e2, out.downtime, topology.ideal_cycle_time_s, planned);
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation against ground truth

struct EvalMinute {
    int minute = 0;
    std::map<int, long> pred_cum;      // by edge
    std::map<int, long> truth_cum;     // by edge
    std::map<int, double> count_err;   // |pred-truth| / max(truth,1), by edge
    std::optional<double> accuracy_pct;  // absent on stopped minutes / no data
    std::optional<double> pred_oee;
    std::optional<double> truth_oee;
    std::optional<double> oee_err;
};

struct EvalSeries {
    std::vector<EvalMinute> minutes;
    double mean_count_err = 0.0;              // over (minute, edge) pairs
    std::optional<double> mean_oee_err;       // over minutes with both OEEs
    std::optional<double> max_accuracy_pct;   // best minute
    std::optional<std::string> accuracy_absent_reason;
};

struct EvalPrediction {
    const std::map<int, EdgeCountSeries>* edge_series = nullptr;
    const std::vector<MinuteKpi>* minute_kpis = nullptr;
    // per-camera confirmed-track snapshots, needed for per-frame accuracy
    const std::map<int, std::vector<TrackSnapshot>>* snapshots_by_camera = nullptr;
};

// Per-minute cumulative-count error per edge, per-frame accuracy (one-to-one
// IoU >= 0.5 matching against per-frame truth), and per-minute OEE error.
// Accuracy bins are absent during fully stopped minutes.
inline EvalSeries evaluate(const EvalPrediction& pred, const GroundTruthLedger& truth,
                           const LineTopology& topology) {
    if (!pred.edge_series || !pred.minute_kpis)
        throw ContractViolation("evaluate: prediction series required");
    const LedgerKpis truth_kpis = ledger_kpis(truth, topology);
    const int n_minutes = static_cast<int>(pred.minute_kpis->size());

    // index prediction snapshots by camera and frame time
    std::map<int, std::map<Timestamp, std::vector<const TrackSnapshot*>>> pred_frames;
    if (pred.snapshots_by_camera) {
        for (const auto& [cam, snaps] : *pred.snapshots_by_camera) {
            auto& frames = pred_frames[cam];
            for (const auto& s : snaps) frames[s.time].push_back(&s);
        }
    }

    EvalSeries out;
    double count_err_sum = 0.0;
    long count_err_n = 0;
    double oee_err_sum = 0.0;
    long oee_err_n = 0;

    std::vector<double> acc_sum(static_cast<std::size_t>(n_minutes), 0.0);
    std::vector<long> acc_n(static_cast<std::size_t>(n_minutes), 0);
    if (truth.per_frame_truth && pred.snapshots_by_camera) {
        for (const auto& [cam, frames] : *truth.per_frame_truth) {
            const auto pit = pred_frames.find(cam);
            for (const auto& f : frames) {
                if (!truth_kpis.signal.running_at(f.time)) continue;
                const int m = static_cast<int>(f.time / kMinuteMs);
                if (m < 0 || m >= n_minutes) continue;
                std::vector<BoundingBox> pboxes;
                if (pit != pred_frames.end()) {
                    auto fit = pit->second.find(f.time);
                    if (fit != pit->second.end())
                        for (const auto* s : fit->second) pboxes.push_back(s->bbox);
                }
                double acc;
                if (f.boxes.empty()) {
                    acc = pboxes.empty() ? 100.0 : 0.0;
                } else {
                    const auto m50 = match_by_max_iou(pboxes, f.boxes, 0.5);
                    acc = 100.0 * static_cast<double>(m50.pairs.size()) /
                          static_cast<double>(f.boxes.size());
                }
                acc_sum[static_cast<std::size_t>(m)] += acc;
                ++acc_n[static_cast<std::size_t>(m)];
            }
        }
    } else {
        out.accuracy_absent_reason = !truth.per_frame_truth
                                         ? "ledger has no per-frame truth"
                                         : "prediction has no per-frame snapshots";
    }

    for (int m = 0; m < n_minutes; ++m) {
        EvalMinute em;
        em.minute = m;
        for (const auto& [edge_id, pseries] : *pred.edge_series) {
            const auto tit = truth_kpis.edge_series.find(edge_id);
            if (tit == truth_kpis.edge_series.end()) continue;
            const long pc = m < static_cast<int>(pseries.cumulative.size())
                                ? pseries.cumulative[static_cast<std::size_t>(m)]
                                : 0;
            const long tc = m < static_cast<int>(tit->second.cumulative.size())
                                ? tit->second.cumulative[static_cast<std::size_t>(m)]
                                : 0;
            em.pred_cum[edge_id] = pc;
            em.truth_cum[edge_id] = tc;
            const double err = static_cast<double>(std::labs(pc - tc)) /
                               static_cast<double>(std::max<long>(tc, 1));
            em.count_err[edge_id] = err;
            count_err_sum += err;
            ++count_err_n;
        }
        if (acc_n[static_cast<std::size_t>(m)] > 0) {
            em.accuracy_pct =
                acc_sum[static_cast<std::size_t>(m)] / static_cast<double>(acc_n[static_cast<std::size_t>(m)]);
            if (!out.max_accuracy_pct || *em.accuracy_pct > *out.max_accuracy_pct)
                out.max_accuracy_pct = em.accuracy_pct;
        }
        em.pred_oee = (*pred.minute_kpis)[static_cast<std::size_t>(m)].breakdown.oee;
        if (m < static_cast<int>(truth_kpis.minutes.size()))
            em.truth_oee = truth_kpis.minutes[static_cast<std::size_t>(m)].breakdown.oee;
        if (em.pred_oee && em.truth_oee) {
            em.oee_err = std::abs(*em.pred_oee - *em.truth_oee);
            oee_err_sum += *em.oee_err;
            ++oee_err_n;
        }
        out.minutes.push_back(std::move(em));
    }
    if (count_err_n > 0) out.mean_count_err = count_err_sum / static_cast<double>(count_err_n);
    if (oee_err_n > 0) out.mean_oee_err = oee_err_sum / static_cast<double>(oee_err_n);
    return out;
}

}  // namespace twinline
