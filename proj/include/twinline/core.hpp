// Shared domain types, timebase, and 2-D geometry primitives.
//
// Conventions used throughout the library:
//   - timestamps are integer milliseconds since session start (offset 0)
//   - image coordinates are per camera, origin top-left, y pointing down
//   - all types here are immutable value types; operations are pure
#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace twinline {

// Milliseconds since session start.
using Timestamp = std::int64_t;

inline double to_seconds(Timestamp t) { return static_cast<double>(t) / 1000.0; }
inline Timestamp to_millis(double seconds) { return static_cast<Timestamp>(std::llround(seconds * 1000.0)); }

// Thrown when an input file or record cannot be parsed. Carries location info.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Thrown when parsed data violates a documented invariant.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Thrown when a caller breaks an operation precondition.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// 1-based camera number, matching the test-setup numbering.
struct CameraId {
    int value = 0;

    friend auto operator<=>(const CameraId&, const CameraId&) = default;
};

struct Point2D {
    double x = 0.0;
    double y = 0.0;

    friend auto operator<=>(const Point2D&, const Point2D&) = default;
};

// Axis-aligned box in pixel coordinates. Valid iff x_min < x_max, y_min < y_max
// and all coordinates finite.
struct BoundingBox {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    double area() const { return width() * height(); }

    bool valid() const {
        return std::isfinite(x_min) && std::isfinite(y_min) && std::isfinite(x_max) &&
               std::isfinite(y_max) && x_min < x_max && y_min < y_max;
    }

    friend auto operator<=>(const BoundingBox&, const BoundingBox&) = default;
};

// One bounding box observed by one camera at one instant.
struct Detection {
    Timestamp time = 0;
    CameraId camera;
    BoundingBox bbox;
    double confidence = 0.0;  // in [0, 1]
    std::string class_label;
};

// Oriented segment in pixel coordinates, a != b. Used as a tripwire.
struct LineSegment2D {
    Point2D a;
    Point2D b;

    bool valid() const { return a != b; }

    friend auto operator<=>(const LineSegment2D&, const LineSegment2D&) = default;
};

// Intersection over union of two valid boxes; 0 when disjoint.
inline double iou(const BoundingBox& a, const BoundingBox& b) {
    const double ix = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
    const double iy = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
    if (ix <= 0.0 || iy <= 0.0) return 0.0;
    const double inter = ix * iy;
    return inter / (a.area() + b.area() - inter);
}

inline Point2D centroid(const BoundingBox& b) {
    return {(b.x_min + b.x_max) / 2.0, (b.y_min + b.y_max) / 2.0};
}

// Result of a proper segment/tripwire crossing. `sign` is the orientation of
// the endpoint relative to the wire's a->b direction (+1 flow, -1 counter-flow
// by config construction); `param` locates the crossing along p1->p2 in [0,1].
struct SegmentCrossing {
    int sign = 0;
    double param = 0.0;
};

namespace detail {
inline double cross2(const Point2D& o, const Point2D& u, const Point2D& v) {
    return (u.x - o.x) * (v.y - o.y) - (u.y - o.y) * (v.x - o.x);
}
}  // namespace detail

// Proper intersection of the motion segment p1->p2 with `wire`. Touching an
// endpoint or collinear overlap counts as no crossing; degenerate p1 == p2
// returns absent.
inline std::optional<SegmentCrossing> segments_intersect(const Point2D& p1, const Point2D& p2,
                                                         const LineSegment2D& wire) {
    if (p1 == p2) return std::nullopt;
    const double o1 = detail::cross2(wire.a, wire.b, p1);
    const double o2 = detail::cross2(wire.a, wire.b, p2);
    if (!(o1 < 0.0 != o2 < 0.0) || o1 == 0.0 || o2 == 0.0) return std::nullopt;
    const double o3 = detail::cross2(p1, p2, wire.a);
    const double o4 = detail::cross2(p1, p2, wire.b);
    if (!(o3 < 0.0 != o4 < 0.0) || o3 == 0.0 || o4 == 0.0) return std::nullopt;
    return SegmentCrossing{o2 > 0.0 ? +1 : -1, o1 / (o1 - o2)};
}

}  // namespace twinline
