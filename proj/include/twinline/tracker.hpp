// Two-stage tracking-by-detection over per-camera detection streams.
//
// High-confidence detections are associated first against predicted tracks by
// maximum total IoU; leftovers get a second chance against low-confidence
// detections with a tighter gate. Motion is a linear-Gaussian constant
// velocity model on (cx, cy, w, h, vx, vy); track snapshots report the raw
// matched detection box, the filtered state is used for prediction and
// gating only.
//
// One tracker instance per camera; instances share nothing.
#pragma once

#include <Eigen/Dense>

#include <map>
#include <vector>

#include "twinline/assignment.hpp"
#include "twinline/core.hpp"

namespace twinline {

struct TrackerConfig {
    double high_conf_threshold = 0.5;
    double low_conf_threshold = 0.1;
    double iou_gate_stage1 = 0.3;
    double iou_gate_stage2 = 0.5;
    double new_track_conf = 0.6;
    int min_hits = 3;
    double max_age_s = 1.0;

    // conventional pixel-tracking noise scales
    double measurement_noise_px = 1.0;   // std of measured cx, cy, w, h
    double process_noise_pos = 2.0;      // std growth of cx, cy per sqrt(s)
    double process_noise_size = 1.0;     // std growth of w, h per sqrt(s)
    double process_noise_vel = 10.0;     // std growth of vx, vy per sqrt(s)
    double initial_velocity_std = 1000.0;

    void validate() const {
        if (!(0.0 <= low_conf_threshold && low_conf_threshold < high_conf_threshold &&
              high_conf_threshold <= 1.0))
            throw ValidationError("tracker: need 0 <= low < high <= 1 confidence thresholds");
        if (!(iou_gate_stage1 > 0.0 && iou_gate_stage1 <= 1.0) ||
            !(iou_gate_stage2 > 0.0 && iou_gate_stage2 <= 1.0))
            throw ValidationError("tracker: IoU gates must be in (0,1]");
        if (min_hits < 1) throw ValidationError("tracker: min_hits must be >= 1");
        if (!(max_age_s > 0.0)) throw ValidationError("tracker: max_age_s must be > 0");
    }
};

enum class TrackStatus { tentative, confirmed, lost };

inline const char* to_string(TrackStatus s) {
    switch (s) {
        case TrackStatus::tentative: return "tentative";
        case TrackStatus::confirmed: return "confirmed";
        case TrackStatus::lost: return "lost";
    }
    return "?";
}

using StateVec = Eigen::Matrix<double, 6, 1>;
using StateCov = Eigen::Matrix<double, 6, 6>;

// Gaussian motion state: mean (cx, cy, w, h, vx, vy), px and px/s.
struct TrackState {
    StateVec mean = StateVec::Zero();
    StateCov covariance = StateCov::Identity();
    Timestamp last_update = 0;

    BoundingBox to_bbox() const {
        const double w = std::max(mean(2), 1e-3);
        const double h = std::max(mean(3), 1e-3);
        return {mean(0) - w / 2.0, mean(1) - h / 2.0, mean(0) + w / 2.0, mean(1) + h / 2.0};
    }
};

struct Track {
    int track_id = 0;
    CameraId camera;
    TrackState state;
    TrackStatus status = TrackStatus::tentative;
    int hits = 0;
    int age_since_update = 0;  // frames since last matched detection
    Timestamp last_hit_time = 0;
    BoundingBox last_bbox;  // raw box of the last matched detection
    double last_confidence = 0.0;
};

// Per-frame emission for confirmed, matched tracks.
struct TrackSnapshot {
    Timestamp time = 0;
    CameraId camera;
    int track_id = 0;
    BoundingBox bbox;
    TrackStatus status = TrackStatus::confirmed;
    double confidence = 0.0;
};

namespace detail {

inline StateVec state_from_bbox(const BoundingBox& b) {
    StateVec x;
    x << (b.x_min + b.x_max) / 2.0, (b.y_min + b.y_max) / 2.0, b.width(), b.height(), 0.0, 0.0;
    return x;
}

inline void symmetrize(StateCov& p) { p = ((p + p.transpose()) / 2.0).eval(); }

}  // namespace detail

// Advances a track's state to `to_time` under the constant-velocity model.
// Zero dt is the identity; the covariance is inflated by process noise
// proportional to dt.
inline Track predict(const Track& track, Timestamp to_time, const TrackerConfig& cfg) {
    if (to_time < track.state.last_update)
        throw ContractViolation("predict: to_time precedes track state time");
    Track out = track;
    const double dt = to_seconds(to_time - track.state.last_update);
    if (dt > 0.0) {
        StateCov f = StateCov::Identity();
        f(0, 4) = dt;
        f(1, 5) = dt;
        out.state.mean = f * out.state.mean;
        StateCov q = StateCov::Zero();
        q(0, 0) = q(1, 1) = cfg.process_noise_pos * cfg.process_noise_pos * dt;
        q(2, 2) = q(3, 3) = cfg.process_noise_size * cfg.process_noise_size * dt;
        q(4, 4) = q(5, 5) = cfg.process_noise_vel * cfg.process_noise_vel * dt;
        out.state.covariance = f * out.state.covariance * f.transpose() + q;
        detail::symmetrize(out.state.covariance);
    }
    out.state.last_update = to_time;
    return out;
}

namespace detail {

// Linear-Gaussian measurement update on (cx, cy, w, h); Joseph form keeps the
// covariance symmetric PSD.
inline void kalman_update(TrackState& st, const BoundingBox& z_box, const TrackerConfig& cfg) {
    using Meas = Eigen::Matrix<double, 4, 1>;
    using H = Eigen::Matrix<double, 4, 6>;
    Meas z;
    z << (z_box.x_min + z_box.x_max) / 2.0, (z_box.y_min + z_box.y_max) / 2.0, z_box.width(),
        z_box.height();
    H h = H::Zero();
    h(0, 0) = h(1, 1) = h(2, 2) = h(3, 3) = 1.0;
    const double r = cfg.measurement_noise_px * cfg.measurement_noise_px;
    const Eigen::Matrix4d rm = Eigen::Matrix4d::Identity() * r;
    const Eigen::Matrix4d s = h * st.covariance * h.transpose() + rm;
    const Eigen::Matrix<double, 6, 4> k = st.covariance * h.transpose() * s.inverse();
    st.mean += k * (z - h * st.mean);
    const StateCov ikh = StateCov::Identity() - k * h;
    st.covariance = ikh * st.covariance * ikh.transpose() + k * rm * k.transpose();
    symmetrize(st.covariance);
    st.mean(2) = std::max(st.mean(2), 1e-3);
    st.mean(3) = std::max(st.mean(3), 1e-3);
}

}  // namespace detail

struct AssociationResult {
    std::vector<std::pair<int, int>> matches;  // (track index, detection index)
    std::vector<int> unmatched_tracks;
    std::vector<int> unmatched_dets;
};

// Two-stage association over already-predicted tracks. Stage 1 pairs tracks
// with detections at conf >= high by maximum total IoU (gate iou_gate_stage1);
// stage 2 pairs the leftover tracks with low-band detections
// (low <= conf < high, gate iou_gate_stage2). Detections below the low band
// are reported unmatched and never matched.
inline AssociationResult associate_frame(const std::vector<Track>& tracks,
                                         const std::vector<Detection>& dets,
                                         const TrackerConfig& cfg) {
    AssociationResult out;
    std::vector<int> high_idx, low_idx;
    for (int j = 0; j < static_cast<int>(dets.size()); ++j) {
        if (dets[j].confidence >= cfg.high_conf_threshold)
            high_idx.push_back(j);
        else if (dets[j].confidence >= cfg.low_conf_threshold)
            low_idx.push_back(j);
    }
    std::vector<BoundingBox> track_boxes;
    track_boxes.reserve(tracks.size());
    for (const auto& t : tracks) track_boxes.push_back(t.state.to_bbox());

    auto boxes_of = [&](const std::vector<int>& idx) {
        std::vector<BoundingBox> v;
        v.reserve(idx.size());
        for (int j : idx) v.push_back(dets[static_cast<std::size_t>(j)].bbox);
        return v;
    };

    // stage 1
    const auto m1 = match_by_max_iou(track_boxes, boxes_of(high_idx), cfg.iou_gate_stage1);
    std::vector<char> det_matched(dets.size(), 0);
    std::vector<int> leftover_tracks;
    for (const auto& [ti, hj] : m1.pairs) {
        const int dj = high_idx[static_cast<std::size_t>(hj)];
        out.matches.emplace_back(ti, dj);
        det_matched[static_cast<std::size_t>(dj)] = 1;
    }
    leftover_tracks = m1.unmatched_rows;

    // stage 2
    std::vector<BoundingBox> leftover_boxes;
    for (int ti : leftover_tracks) leftover_boxes.push_back(track_boxes[static_cast<std::size_t>(ti)]);
    const auto m2 = match_by_max_iou(leftover_boxes, boxes_of(low_idx), cfg.iou_gate_stage2);
    for (const auto& [li, lj] : m2.pairs) {
        const int ti = leftover_tracks[static_cast<std::size_t>(li)];
        const int dj = low_idx[static_cast<std::size_t>(lj)];
        out.matches.emplace_back(ti, dj);
        det_matched[static_cast<std::size_t>(dj)] = 1;
    }
    for (int li : m2.unmatched_rows)
        out.unmatched_tracks.push_back(leftover_tracks[static_cast<std::size_t>(li)]);

    for (int j = 0; j < static_cast<int>(dets.size()); ++j)
        if (!det_matched[static_cast<std::size_t>(j)]) out.unmatched_dets.push_back(j);

    std::sort(out.matches.begin(), out.matches.end());
    std::sort(out.unmatched_tracks.begin(), out.unmatched_tracks.end());
    return out;
}

// Stateful tracker for a single camera stream. `step` is single-owner
// sequential; frames must arrive with non-decreasing timestamps.
class CameraTracker {
public:
    CameraTracker(CameraId camera, TrackerConfig cfg) : camera_(camera), cfg_(cfg) {
        cfg_.validate();
    }

    // Processes one frame; returns snapshots of the confirmed tracks matched
    // in this frame.
    std::vector<TrackSnapshot> step(Timestamp frame_time, const std::vector<Detection>& dets) {
        if (has_frame_ && frame_time < last_frame_time_)
            throw ContractViolation("tracker step: out-of-order frame for camera " +
                                    std::to_string(camera_.value));
        for (const auto& d : dets) {
            if (d.camera != camera_)
                throw ContractViolation("tracker step: detection from foreign camera");
        }
        has_frame_ = true;
        last_frame_time_ = frame_time;

        for (auto& t : tracks_) t = predict(t, frame_time, cfg_);
        const auto assoc = associate_frame(tracks_, dets, cfg_);

        std::vector<TrackSnapshot> snapshots;
        for (const auto& [ti, dj] : assoc.matches) {
            Track& t = tracks_[static_cast<std::size_t>(ti)];
            const Detection& d = dets[static_cast<std::size_t>(dj)];
            detail::kalman_update(t.state, d.bbox, cfg_);
            ++t.hits;
            t.age_since_update = 0;
            t.last_hit_time = frame_time;
            t.last_bbox = d.bbox;
            t.last_confidence = d.confidence;
            if (t.status == TrackStatus::tentative && t.hits >= cfg_.min_hits)
                t.status = TrackStatus::confirmed;
            if (t.status == TrackStatus::confirmed) {
                snapshots.push_back(
                    {frame_time, camera_, t.track_id, d.bbox, t.status, d.confidence});
            }
        }
        for (int ti : assoc.unmatched_tracks) ++tracks_[static_cast<std::size_t>(ti)].age_since_update;

        // spawn tentative tracks from unmatched confident detections
        for (int dj : assoc.unmatched_dets) {
            const Detection& d = dets[static_cast<std::size_t>(dj)];
            if (d.confidence < cfg_.new_track_conf) continue;
            Track t;
            t.track_id = next_id_++;
            t.camera = camera_;
            t.state.mean = detail::state_from_bbox(d.bbox);
            StateCov p0 = StateCov::Zero();
            const double m2 = 4.0 * cfg_.measurement_noise_px * cfg_.measurement_noise_px;
            p0(0, 0) = p0(1, 1) = p0(2, 2) = p0(3, 3) = m2;
            p0(4, 4) = p0(5, 5) = cfg_.initial_velocity_std * cfg_.initial_velocity_std;
            t.state.covariance = p0;
            t.state.last_update = frame_time;
            t.status = cfg_.min_hits <= 1 ? TrackStatus::confirmed : TrackStatus::tentative;
            t.hits = 1;
            t.last_hit_time = frame_time;
            t.last_bbox = d.bbox;
            t.last_confidence = d.confidence;
            tracks_.push_back(std::move(t));
            if (tracks_.back().status == TrackStatus::confirmed) {
                snapshots.push_back({frame_time, camera_, tracks_.back().track_id, d.bbox,
                                     TrackStatus::confirmed, d.confidence});
            }
        }

        // age out tracks past max_age; lost tracks are never revived
        const Timestamp max_age_ms = to_millis(cfg_.max_age_s);
        std::vector<Track> kept;
        kept.reserve(tracks_.size());
        for (auto& t : tracks_) {
            if (frame_time - t.last_hit_time > max_age_ms) {
                t.status = TrackStatus::lost;
                ++lost_count_;
            } else {
                kept.push_back(std::move(t));
            }
        }
        tracks_ = std::move(kept);

        std::sort(snapshots.begin(), snapshots.end(),
                  [](const TrackSnapshot& a, const TrackSnapshot& b) {
                      return a.track_id < b.track_id;
                  });
        return snapshots;
    }

    const std::vector<Track>& active_tracks() const { return tracks_; }
    const TrackerConfig& config() const { return cfg_; }
    CameraId camera() const { return camera_; }
    std::size_t lost_count() const { return lost_count_; }

private:
    CameraId camera_;
    TrackerConfig cfg_;
    std::vector<Track> tracks_;
    int next_id_ = 1;
    bool has_frame_ = false;
    Timestamp last_frame_time_ = 0;
    std::size_t lost_count_ = 0;
};

}  // namespace twinline
