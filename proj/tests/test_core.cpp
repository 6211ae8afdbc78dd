#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "twinline/core.hpp"

using namespace twinline;

namespace {

BoundingBox random_box(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> pos(-100.0, 100.0);
    std::uniform_real_distribution<double> size(0.5, 50.0);
    const double x = pos(rng), y = pos(rng), w = size(rng), h = size(rng);
    return {x, y, x + w, y + h};
}

}  // namespace

TEST_CASE("iou on the worked examples") {
    const BoundingBox a{0, 0, 10, 10};
    CHECK(iou(a, a) == Catch::Approx(1.0));
    CHECK(iou(a, {20, 20, 30, 30}) == 0.0);
    // nested half-area: intersection 100, union 200
    CHECK(iou(a, {0, 0, 10, 20}) == Catch::Approx(0.5));
}

TEST_CASE("iou is symmetric and 1 on self") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 300; ++i) {
        const auto a = random_box(rng), b = random_box(rng);
        const double ab = iou(a, b);
        CHECK(ab == iou(b, a));
        CHECK((ab >= 0.0 && ab <= 1.0));
        CHECK(iou(a, a) == Catch::Approx(1.0));
    }
}

TEST_CASE("centroid") {
    CHECK(centroid({0, 0, 10, 10}) == Point2D{5, 5});
    CHECK(centroid({2, 4, 6, 8}) == Point2D{4, 6});
    CHECK(centroid({-3, -3, 3, 3}) == Point2D{0, 0});
}

TEST_CASE("centroid lies inside the box") {
    std::mt19937_64 rng(12);
    for (int i = 0; i < 300; ++i) {
        const auto b = random_box(rng);
        const auto c = centroid(b);
        CHECK((c.x > b.x_min && c.x < b.x_max));
        CHECK((c.y > b.y_min && c.y < b.y_max));
    }
}

TEST_CASE("segment crossing: perpendicular pass") {
    const LineSegment2D wire{{0, 0}, {10, 0}};
    const auto hit = segments_intersect({5, -1}, {5, 1}, wire);
    REQUIRE(hit.has_value());
    CHECK(hit->sign == +1);
    CHECK(hit->param == Catch::Approx(0.5));
}

TEST_CASE("segment crossing: same side is absent") {
    const LineSegment2D wire{{0, 0}, {10, 0}};
    CHECK_FALSE(segments_intersect({5, 1}, {5, 3}, wire).has_value());
}

TEST_CASE("segment crossing: outside the wire extent is absent") {
    const LineSegment2D wire{{6, 0}, {10, 0}};
    CHECK_FALSE(segments_intersect({5, -1}, {5, 1}, wire).has_value());
}

TEST_CASE("segment crossing: degenerate motion is absent") {
    const LineSegment2D wire{{0, 0}, {10, 0}};
    CHECK_FALSE(segments_intersect({5, -1}, {5, -1}, wire).has_value());
}

TEST_CASE("segment crossing: endpoint touch does not count") {
    const LineSegment2D wire{{0, 0}, {10, 0}};
    CHECK_FALSE(segments_intersect({5, -1}, {5, 0}, wire).has_value());
    CHECK_FALSE(segments_intersect({10, -1}, {10, 1}, wire).has_value());
}

TEST_CASE("segment crossing: swapped endpoints flip the sign") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> pos(-20.0, 20.0);
    int crossings = 0;
    for (int i = 0; i < 2000; ++i) {
        const Point2D p1{pos(rng), pos(rng)}, p2{pos(rng), pos(rng)};
        const LineSegment2D wire{{pos(rng), pos(rng)}, {pos(rng), pos(rng)}};
        if (!wire.valid()) continue;
        const auto fwd = segments_intersect(p1, p2, wire);
        const auto rev = segments_intersect(p2, p1, wire);
        CHECK(fwd.has_value() == rev.has_value());
        if (fwd && rev) {
            CHECK(fwd->sign == -rev->sign);
            CHECK(fwd->param == Catch::Approx(1.0 - rev->param));
            ++crossings;
        }
    }
    CHECK(crossings > 100);  // the generator actually exercises the branch
}
