#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>

#include <set>

#include "twinline/tracker.hpp"

using namespace twinline;

namespace {

Detection det(Timestamp t, double cx, double cy, double w, double h, double conf,
              int cam = 1) {
    Detection d;
    d.time = t;
    d.camera.value = cam;
    d.bbox = {cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2};
    d.confidence = conf;
    d.class_label = "box";
    return d;
}

Track seeded_track(double cx, double cy, double vx, double vy, Timestamp t = 0) {
    Track tr;
    tr.track_id = 1;
    tr.camera.value = 1;
    tr.state.mean << cx, cy, 40.0, 40.0, vx, vy;
    tr.state.covariance = StateCov::Identity();
    tr.state.last_update = t;
    tr.status = TrackStatus::confirmed;
    tr.hits = 5;
    return tr;
}

double max_asymmetry(const StateCov& p) {
    return (p - p.transpose()).cwiseAbs().maxCoeff();
}

double min_eigenvalue(const StateCov& p) {
    Eigen::SelfAdjointEigenSolver<StateCov> es(p);
    return es.eigenvalues().minCoeff();
}

}  // namespace

TEST_CASE("predict: zero dt is the identity") {
    const auto tr = seeded_track(10.0, 20.0, 5.0, 0.0, 1000);
    const auto out = predict(tr, 1000, TrackerConfig{});
    CHECK(out.state.mean == tr.state.mean);
    CHECK(out.state.covariance == tr.state.covariance);
}

TEST_CASE("predict: linear motion advances the center") {
    const auto tr = seeded_track(10.0, 20.0, 5.0, -2.0, 0);
    const auto out = predict(tr, 2000, TrackerConfig{});
    CHECK(out.state.mean(0) == Catch::Approx(20.0));
    CHECK(out.state.mean(1) == Catch::Approx(16.0));
    CHECK(out.state.mean(2) == 40.0);  // size is not advected
}

TEST_CASE("predict: covariance trace strictly increases for dt > 0") {
    const auto tr = seeded_track(0, 0, 0, 0, 0);
    const auto out = predict(tr, 500, TrackerConfig{});
    CHECK(out.state.covariance.trace() > tr.state.covariance.trace());
    CHECK(max_asymmetry(out.state.covariance) <= 1e-9);
}

TEST_CASE("predict: travelling back in time violates the contract") {
    const auto tr = seeded_track(0, 0, 0, 0, 1000);
    CHECK_THROWS_AS(predict(tr, 999, TrackerConfig{}), ContractViolation);
}

TEST_CASE("associate: one track atop one high-confidence detection matches") {
    const auto tr = seeded_track(100, 100, 0, 0);
    const auto r = associate_frame({tr}, {det(0, 100, 100, 40, 40, 0.9)}, TrackerConfig{});
    REQUIRE(r.matches.size() == 1);
    CHECK(r.matches[0] == std::pair<int, int>{0, 0});
    CHECK(r.unmatched_tracks.empty());
    CHECK(r.unmatched_dets.empty());
}

TEST_CASE("associate: no tracks leaves every detection unmatched") {
    std::vector<Detection> dets;
    for (int i = 0; i < 4; ++i) dets.push_back(det(0, 50.0 * i, 100, 40, 40, 0.9));
    const auto r = associate_frame({}, dets, TrackerConfig{});
    CHECK(r.matches.empty());
    CHECK(r.unmatched_dets.size() == 4);
}

TEST_CASE("associate: low-confidence band goes through stage 2 with its own gate") {
    TrackerConfig cfg;  // stage1 gate 0.3, stage2 gate 0.5
    const auto tr = seeded_track(100, 100, 0, 0);

    // strong IoU, low conf: recovered in stage 2
    const auto hit = associate_frame({tr}, {det(0, 102, 100, 40, 40, 0.3)}, cfg);
    REQUIRE(hit.matches.size() == 1);

    // IoU between the two gates, low conf: stage 2 rejects what stage 1 would take
    const auto d_mid = det(0, 120, 100, 40, 40, 0.3);
    REQUIRE(iou(tr.state.to_bbox(), d_mid.bbox) > cfg.iou_gate_stage1);
    REQUIRE(iou(tr.state.to_bbox(), d_mid.bbox) < cfg.iou_gate_stage2);
    const auto miss = associate_frame({tr}, {d_mid}, cfg);
    CHECK(miss.matches.empty());

    // same box at high conf sails through stage 1
    const auto high = associate_frame({tr}, {det(0, 120, 100, 40, 40, 0.9)}, cfg);
    CHECK(high.matches.size() == 1);
}

TEST_CASE("associate: detections below the low band are never matched") {
    const auto tr = seeded_track(100, 100, 0, 0);
    const auto r = associate_frame({tr}, {det(0, 100, 100, 40, 40, 0.05)}, TrackerConfig{});
    CHECK(r.matches.empty());
    CHECK(r.unmatched_dets == std::vector<int>{0});
}

TEST_CASE("step: single moving box yields exactly one confirmed track") {
    CameraTracker tracker(CameraId{1}, TrackerConfig{});
    std::set<int> ids;
    int snapshots = 0;
    for (int k = 0; k < 10; ++k) {
        const auto snaps =
            tracker.step(k * 33, {det(k * 33, 100.0 + 5.0 * k, 100, 40, 40, 0.9)});
        for (const auto& s : snaps) {
            ids.insert(s.track_id);
            ++snapshots;
        }
    }
    CHECK(ids.size() == 1);       // one identity, no switches
    CHECK(snapshots == 8);        // confirmed from the 3rd frame on
    REQUIRE(tracker.active_tracks().size() == 1);
    CHECK(tracker.active_tracks()[0].status == TrackStatus::confirmed);
}

TEST_CASE("step: a two-frame detection gap within max_age keeps the id") {
    CameraTracker tracker(CameraId{1}, TrackerConfig{});
    int id_before = -1, id_after = -1;
    for (int k = 0; k < 12; ++k) {
        if (k == 6 || k == 7) {
            tracker.step(k * 33, {});
            continue;
        }
        const auto snaps =
            tracker.step(k * 33, {det(k * 33, 100.0 + 5.0 * k, 100, 40, 40, 0.9)});
        for (const auto& s : snaps) {
            if (k < 6) id_before = s.track_id;
            if (k > 7) id_after = s.track_id;
        }
    }
    REQUIRE(id_before > 0);
    CHECK(id_before == id_after);
}

TEST_CASE("step: after max_age the track is lost and never revived") {
    TrackerConfig cfg;
    cfg.max_age_s = 0.2;
    CameraTracker tracker(CameraId{1}, cfg);
    for (int k = 0; k < 5; ++k)
        tracker.step(k * 33, {det(k * 33, 100.0 + 5.0 * k, 100, 40, 40, 0.9)});
    REQUIRE(tracker.active_tracks().size() == 1);
    const int old_id = tracker.active_tracks()[0].track_id;

    tracker.step(1000, {});  // long silence
    CHECK(tracker.active_tracks().empty());
    CHECK(tracker.lost_count() == 1);

    const auto snaps = tracker.step(1033, {det(1033, 400, 100, 40, 40, 0.9)});
    REQUIRE(tracker.active_tracks().size() == 1);
    CHECK(tracker.active_tracks()[0].track_id != old_id);  // re-entry gets a new id
}

TEST_CASE("step: two well-separated boxes never swap identities") {
    CameraTracker tracker(CameraId{1}, TrackerConfig{});
    std::map<int, std::set<int>> ids_by_object;
    for (int k = 0; k < 40; ++k) {
        const auto snaps = tracker.step(
            k * 33, {det(k * 33, 100.0 + 5.0 * k, 100, 40, 40, 0.9),
                     det(k * 33, 500.0 + 5.0 * k, 300, 40, 40, 0.9)});
        for (const auto& s : snaps) {
            const int object = centroid(s.bbox).y < 200 ? 0 : 1;
            ids_by_object[object].insert(s.track_id);
        }
    }
    REQUIRE(ids_by_object.size() == 2);
    CHECK(ids_by_object[0].size() == 1);
    CHECK(ids_by_object[1].size() == 1);
    CHECK(*ids_by_object[0].begin() != *ids_by_object[1].begin());
}

TEST_CASE("step: out-of-order frames violate the contract") {
    CameraTracker tracker(CameraId{1}, TrackerConfig{});
    tracker.step(1000, {});
    CHECK_THROWS_AS(tracker.step(900, {}), ContractViolation);
}

TEST_CASE("step: detections from a foreign camera violate the contract") {
    CameraTracker tracker(CameraId{1}, TrackerConfig{});
    CHECK_THROWS_AS(tracker.step(0, {det(0, 100, 100, 40, 40, 0.9, 2)}), ContractViolation);
}

TEST_CASE("step: only confident detections spawn tracks") {
    TrackerConfig cfg;  // new_track_conf 0.6
    CameraTracker tracker(CameraId{1}, cfg);
    tracker.step(0, {det(0, 100, 100, 40, 40, 0.55)});
    CHECK(tracker.active_tracks().empty());
    tracker.step(33, {det(33, 100, 100, 40, 40, 0.65)});
    CHECK(tracker.active_tracks().size() == 1);
}

TEST_CASE("covariance stays symmetric PSD through many predict/update cycles") {
    std::mt19937_64 rng(41);
    std::normal_distribution<double> g(0.0, 2.0);
    CameraTracker tracker(CameraId{1}, TrackerConfig{});
    for (int k = 0; k < 200; ++k) {
        tracker.step(k * 33, {det(k * 33, 100.0 + 2.0 * k + g(rng), 100 + g(rng), 40, 40, 0.9)});
        for (const auto& t : tracker.active_tracks()) {
            CHECK(max_asymmetry(t.state.covariance) <= 1e-9);
            CHECK(min_eigenvalue(t.state.covariance) >= -1e-9);
        }
    }
}

TEST_CASE("identical input produces identical outputs across runs") {
    auto run = [] {
        std::mt19937_64 rng(42);
        std::normal_distribution<double> g(0.0, 1.5);
        CameraTracker tracker(CameraId{1}, TrackerConfig{});
        std::vector<TrackSnapshot> all;
        for (int k = 0; k < 150; ++k) {
            std::vector<Detection> dets;
            for (int obj = 0; obj < 3; ++obj) {
                if (k % 17 == obj * 5) continue;  // occasional misses
                dets.push_back(det(k * 33, 80.0 + 200.0 * obj + 3.0 * k + g(rng),
                                   100.0 + g(rng), 40, 40, 0.9));
            }
            const auto snaps = tracker.step(k * 33, dets);
            all.insert(all.end(), snaps.begin(), snaps.end());
        }
        return all;
    };
    const auto a = run(), b = run();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].track_id == b[i].track_id);
        CHECK(a[i].time == b[i].time);
        CHECK(a[i].bbox == b[i].bbox);
    }
}
