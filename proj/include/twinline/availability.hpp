// Run/stop classification of the line from motor accelerometer data, and
// aggregation of stop intervals into downtime.
//
// The vibration feature is the windowed standard deviation of the
// acceleration magnitude: magnitude is orientation-invariant and the std
// isolates vibration from gravity's constant offset. Classification applies
// hysteresis thresholds with a minimum-duration debounce, then refines each
// transition edge with a two-Gaussian changepoint fit so stop boundaries land
// within a sensor period or two of the true edge.
#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "twinline/core.hpp"
#include "twinline/ingest.hpp"

namespace twinline {

// Auto-calibration needs a bimodal feature distribution; raised when the
// histogram does not separate into two modes and manual thresholds are needed.
class CalibrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Binary line state over time, stored as a change list: `changes` starts with
// the initial state at t0 and alternates thereafter (1 running, 0 stopped).
struct RunStopSignal {
    Timestamp t0 = 0;
    Timestamp t1 = 0;
    std::vector<std::pair<Timestamp, int>> changes;

    int state_at(Timestamp t) const {
        if (changes.empty()) return 1;
        int state = changes.front().second;
        for (const auto& [ct, cs] : changes) {
            if (ct > t) break;
            state = cs;
        }
        return state;
    }

    bool running_at(Timestamp t) const { return state_at(t) == 1; }
};

// One contiguous interval during which the line is classified as stopped.
struct DowntimeEvent {
    Timestamp t_stop = 0;
    Timestamp t_start = 0;

    double duration_s() const { return to_seconds(t_start - t_stop); }
};

struct AvailabilityConfig {
    enum class ThresholdMode { manual, automatic };

    double window_s = 1.0;
    std::optional<double> run_threshold;   // required in manual mode
    std::optional<double> stop_threshold;  // required in manual mode
    double min_state_duration_s = 2.0;
    ThresholdMode mode = ThresholdMode::automatic;
    bool refine_edges = true;
};

// Population standard deviation of the acceleration magnitude over a window.
inline double vibration_feature(std::span<const SensorSample> window) {
    if (window.empty()) throw ContractViolation("vibration_feature: empty window");
    double mean = 0.0;
    for (const auto& s : window) mean += s.accel_magnitude();
    mean /= static_cast<double>(window.size());
    double var = 0.0;
    for (const auto& s : window) {
        const double d = s.accel_magnitude() - mean;
        var += d * d;
    }
    var /= static_cast<double>(window.size());
    return std::sqrt(var);
}

// Feature evaluated at every sample over a centered window of `window_s`.
inline std::vector<double> feature_series(const std::vector<SensorSample>& samples,
                                          double window_s) {
    const std::size_t n = samples.size();
    std::vector<double> mags(n), out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) mags[i] = samples[i].accel_magnitude();
    const Timestamp half = to_millis(window_s / 2.0);
    std::size_t lo = 0, hi = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const Timestamp t = samples[i].time;
        while (lo < n && samples[lo].time < t - half) ++lo;
        if (hi < lo) hi = lo;
        while (hi < n && samples[hi].time <= t + half) ++hi;
        double mean = 0.0;
        for (std::size_t k = lo; k < hi; ++k) mean += mags[k];
        mean /= static_cast<double>(hi - lo);
        double var = 0.0;
        for (std::size_t k = lo; k < hi; ++k) {
            const double d = mags[k] - mean;
            var += d * d;
        }
        out[i] = std::sqrt(var / static_cast<double>(hi - lo));
    }
    return out;
}

struct AutoThresholds {
    double run = 0.0;
    double stop = 0.0;
};

// Between-class variance maximization (Otsu) over the feature histogram, with
// the hysteresis pair placed at the optimum +/- 10% of the mode separation.
inline AutoThresholds auto_thresholds(const std::vector<double>& features) {
    if (features.empty()) throw CalibrationError("auto thresholds: no feature samples");
    double fmin = features[0], fmax = features[0];
    for (double f : features) {
        fmin = std::min(fmin, f);
        fmax = std::max(fmax, f);
    }
    if (!(fmax > fmin))
        throw CalibrationError("auto thresholds: constant feature; set manual thresholds");

    constexpr int kBins = 256;
    const double width = (fmax - fmin) / kBins;
    std::vector<double> hist(kBins, 0.0);
    for (double f : features) {
        int b = static_cast<int>((f - fmin) / width);
        b = std::clamp(b, 0, kBins - 1);
        hist[b] += 1.0;
    }
    const double total = static_cast<double>(features.size());
    std::vector<double> bin_center(kBins);
    for (int b = 0; b < kBins; ++b) bin_center[b] = fmin + (b + 0.5) * width;

    double sum_all = 0.0;
    for (int b = 0; b < kBins; ++b) sum_all += hist[b] * bin_center[b];

    double best = -1.0;
    int best_lo = 0, best_hi = 0;
    double w0 = 0.0, sum0 = 0.0;
    for (int b = 0; b + 1 < kBins; ++b) {
        w0 += hist[b];
        sum0 += hist[b] * bin_center[b];
        const double w1 = total - w0;
        if (w0 <= 0.0 || w1 <= 0.0) continue;
        const double m0 = sum0 / w0;
        const double m1 = (sum_all - sum0) / w1;
        const double sigma_b = w0 * w1 * (m0 - m1) * (m0 - m1);
        if (sigma_b > best * (1.0 + 1e-12)) {
            best = sigma_b;
            best_lo = best_hi = b;
        } else if (sigma_b >= best * (1.0 - 1e-12)) {
            best_hi = b;  // plateau across empty bins between the modes
        }
    }
    const int split = (best_lo + best_hi) / 2;
    const double t_star = fmin + (split + 1) * width;  // middle of the optimum plateau

    double wl = 0.0, sl = 0.0, sl2 = 0.0, wh = 0.0, sh = 0.0, sh2 = 0.0;
    for (double f : features) {
        if (f <= t_star) {
            wl += 1.0;
            sl += f;
            sl2 += f * f;
        } else {
            wh += 1.0;
            sh += f;
            sh2 += f * f;
        }
    }
    if (wl <= 0.0 || wh <= 0.0)
        throw CalibrationError("auto thresholds: histogram is unimodal; set manual thresholds");
    const double m0 = sl / wl, m1 = sh / wh;
    const double v0 = std::max(0.0, sl2 / wl - m0 * m0);
    const double v1 = std::max(0.0, sh2 / wh - m1 * m1);
    const double pooled_std = std::sqrt((wl * v0 + wh * v1) / total);
    const double separation = m1 - m0;
    if (separation < 3.0 * pooled_std)
        throw CalibrationError(
            "auto thresholds: feature histogram is unimodal (mode separation " +
            std::to_string(separation) + " < 3x pooled std " + std::to_string(pooled_std) +
            "); set manual run/stop thresholds");

    return {t_star + 0.1 * separation, t_star - 0.1 * separation};
}

namespace detail {

// Removes interior state segments shorter than `min_dur_ms`, merging their
// neighbors; the first and last segments are kept as observed. Idempotent.
inline std::vector<std::pair<Timestamp, int>> debounce_changes(
    std::vector<std::pair<Timestamp, int>> changes, Timestamp end_time, Timestamp min_dur_ms) {
    bool removed = true;
    while (removed && changes.size() > 2) {
        removed = false;
        for (std::size_t i = 1; i + 1 < changes.size(); ++i) {
            const Timestamp dur = changes[i + 1].first - changes[i].first;
            if (dur < min_dur_ms) {
                changes.erase(changes.begin() + static_cast<std::ptrdiff_t>(i));
                removed = true;
                break;
            }
        }
        // merge adjacent duplicates created by removal
        std::vector<std::pair<Timestamp, int>> merged;
        for (const auto& c : changes) {
            if (!merged.empty() && merged.back().second == c.second) continue;
            merged.push_back(c);
        }
        changes = std::move(merged);
    }
    (void)end_time;
    return changes;
}

// Two-Gaussian maximum-likelihood changepoint inside [lo, hi): returns the
// index of the first sample belonging to the new regime.
inline std::size_t refine_changepoint(const std::vector<double>& mags, std::size_t lo,
                                      std::size_t hi, double mu_a, double sigma_a, double mu_b,
                                      double sigma_b, std::size_t fallback) {
    if (sigma_a < 1e-12 || sigma_b < 1e-12 || hi <= lo + 1) return fallback;
    const double la = std::log(sigma_a), lb = std::log(sigma_b);
    // score(i) = loglik under A minus loglik under B
    auto score = [&](std::size_t i) {
        const double da = (mags[i] - mu_a) / sigma_a;
        const double db = (mags[i] - mu_b) / sigma_b;
        return (-la - 0.5 * da * da) - (-lb - 0.5 * db * db);
    };
    // maximize sum_{i<j} score(i) over j in [lo, hi]
    double run = 0.0, best = 0.0;
    std::size_t best_j = lo;
    for (std::size_t i = lo; i < hi; ++i) {
        run += score(i);
        if (run > best) {
            best = run;
            best_j = i + 1;
        }
    }
    if (best_j <= lo || best_j >= hi) return fallback;
    return best_j;
}

}  // namespace detail

// Classifies the line as running/stopped from time-sorted sensor samples.
inline RunStopSignal classify_run_stop(const std::vector<SensorSample>& samples,
                                       const AvailabilityConfig& cfg) {
    if (samples.empty()) throw ContractViolation("classify_run_stop: no samples");
    if (!(cfg.window_s > 0.0)) throw ContractViolation("classify_run_stop: window_s must be > 0");

    const auto feats = feature_series(samples, cfg.window_s);
    double th_run, th_stop;
    if (cfg.mode == AvailabilityConfig::ThresholdMode::manual) {
        if (!cfg.run_threshold || !cfg.stop_threshold)
            throw ContractViolation("manual mode requires run and stop thresholds");
        th_run = *cfg.run_threshold;
        th_stop = *cfg.stop_threshold;
    } else {
        const auto th = auto_thresholds(feats);
        th_run = th.run;
        th_stop = th.stop;
    }
    if (!(th_stop < th_run)) throw ContractViolation("stop threshold must be below run threshold");

    const std::size_t n = samples.size();
    std::vector<double> mags(n);
    for (std::size_t i = 0; i < n; ++i) mags[i] = samples[i].accel_magnitude();

    // hysteresis scan; transition indices mark the first sample in a new state
    int state = feats[0] > (th_run + th_stop) / 2.0 ? 1 : 0;
    std::vector<std::pair<std::size_t, int>> idx_changes{{0, state}};
    for (std::size_t i = 1; i < n; ++i) {
        if (state == 1 && feats[i] <= th_stop) {
            state = 0;
            idx_changes.emplace_back(i, state);
        } else if (state == 0 && feats[i] >= th_run) {
            state = 1;
            idx_changes.emplace_back(i, state);
        }
    }

    RunStopSignal sig;
    sig.t0 = samples.front().time;
    sig.t1 = samples.back().time;

    std::vector<std::pair<Timestamp, int>> changes;
    changes.reserve(idx_changes.size());
    const Timestamp window_ms = to_millis(cfg.window_s);
    for (std::size_t k = 0; k < idx_changes.size(); ++k) {
        const auto [i, st] = idx_changes[k];
        Timestamp t = samples[i].time;
        if (k > 0 && cfg.refine_edges) {
            // estimate each side's distribution away from the uncertain zone
            const std::size_t prev_i = idx_changes[k - 1].first;
            const std::size_t next_i =
                k + 1 < idx_changes.size() ? idx_changes[k + 1].first : n;
            std::size_t lo = i, hi = i;
            while (lo > prev_i && samples[i].time - samples[lo - 1].time <= window_ms) --lo;
            while (hi < next_i && samples[hi].time - samples[i].time <= window_ms) ++hi;
            auto side_stats = [&](std::size_t a, std::size_t b, double& mu, double& sd) {
                mu = 0.0;
                sd = 0.0;
                if (b <= a) return;
                for (std::size_t q = a; q < b; ++q) mu += mags[q];
                mu /= static_cast<double>(b - a);
                for (std::size_t q = a; q < b; ++q) sd += (mags[q] - mu) * (mags[q] - mu);
                sd = std::sqrt(sd / static_cast<double>(b - a));
            };
            double mu_a, sd_a, mu_b, sd_b;
            side_stats(prev_i, lo, mu_a, sd_a);
            side_stats(hi, next_i, mu_b, sd_b);
            if (lo > prev_i + 1 || hi < next_i) {  // enough context on either side
                const std::size_t j =
                    detail::refine_changepoint(mags, lo, hi, mu_a, sd_a, mu_b, sd_b, i);
                if (j > 0 && j < n) t = (samples[j - 1].time + samples[j].time) / 2;
            }
        }
        if (!changes.empty() && t <= changes.back().first) t = changes.back().first + 1;
        changes.emplace_back(t, st);
    }

    sig.changes = detail::debounce_changes(std::move(changes), sig.t1,
                                           to_millis(cfg.min_state_duration_s));
    return sig;
}

// Maximal stopped intervals clipped to [t_begin, t_end].
inline std::vector<DowntimeEvent> downtime_events(const RunStopSignal& signal, Timestamp t_begin,
                                                  Timestamp t_end) {
    std::vector<DowntimeEvent> out;
    if (signal.changes.empty()) return out;
    for (std::size_t i = 0; i < signal.changes.size(); ++i) {
        if (signal.changes[i].second != 0) continue;
        const Timestamp start = signal.changes[i].first;
        const Timestamp stop_end =
            i + 1 < signal.changes.size() ? signal.changes[i + 1].first : t_end;
        const Timestamp a = std::max(start, t_begin);
        const Timestamp b = std::min(stop_end, t_end);
        if (a < b) out.push_back({a, b});
    }
    return out;
}

// Eq-style total: sum of (t_start - t_stop) over all downtime events.
inline double total_downtime_s(const std::vector<DowntimeEvent>& events) {
    double total = 0.0;
    for (const auto& e : events) total += e.duration_s();
    return total;
}

// Two-column CSV (time_ms,state) of the change list plus a terminal row.
inline void write_run_stop_csv(const std::filesystem::path& path, const RunStopSignal& signal) {
    std::string buf = "time_ms,state\n";
    for (const auto& [t, s] : signal.changes) {
        detail::append_int(buf, t);
        buf.push_back(',');
        detail::append_int(buf, s);
        buf.push_back('\n');
    }
    if (!signal.changes.empty() && signal.changes.back().first < signal.t1) {
        detail::append_int(buf, signal.t1);
        buf.push_back(',');
        detail::append_int(buf, signal.changes.back().second);
        buf.push_back('\n');
    }
    detail::write_text_file(path, buf);
}

}  // namespace twinline
