// Test-side oracles, kept independent of the implementation paths they check.
#pragma once

#include <cmath>
#include <vector>

#include "twinline/core.hpp"

namespace twinline::testing {

struct OracleEvent {
    Timestamp time;
    int direction;
};

// Brute-force tripwire oracle: linearly interpolates the trajectory at 1 ms
// resolution and counts sign changes of the wire's side function, applying
// the same per-direction refractory rule on its own event times. Works from
// the signed-distance scan plus a projection containment check, not from the
// library's segment intersection routine.
inline std::vector<OracleEvent> dense_crossing_oracle(
    const std::vector<std::pair<Timestamp, Point2D>>& trajectory, const LineSegment2D& wire,
    Timestamp refractory_ms) {
    const double wx = wire.b.x - wire.a.x;
    const double wy = wire.b.y - wire.a.y;
    const double wlen2 = wx * wx + wy * wy;
    auto side = [&](const Point2D& p) { return wx * (p.y - wire.a.y) - wy * (p.x - wire.a.x); };

    std::vector<OracleEvent> out;
    Timestamp last_plus = -1, last_minus = -1;
    for (std::size_t i = 1; i < trajectory.size(); ++i) {
        const auto& [t0, p0] = trajectory[i - 1];
        const auto& [t1, p1] = trajectory[i];
        if (t1 <= t0) continue;
        auto at = [&](Timestamp t) {
            const double f = static_cast<double>(t - t0) / static_cast<double>(t1 - t0);
            return Point2D{p0.x + f * (p1.x - p0.x), p0.y + f * (p1.y - p0.y)};
        };
        for (Timestamp t = t0; t < t1; ++t) {
            const Point2D a = at(t);
            const Point2D b = at(t + 1);
            const double sa = side(a), sb = side(b);
            if (sa == 0.0 || sb == 0.0 || (sa < 0.0) == (sb < 0.0)) continue;
            // crossing point, projected onto the wire axis
            const double f = sa / (sa - sb);
            const Point2D c{a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)};
            const double u = ((c.x - wire.a.x) * wx + (c.y - wire.a.y) * wy) / wlen2;
            if (u <= 0.0 || u >= 1.0) continue;
            const int dir = sb > 0.0 ? +1 : -1;
            Timestamp& last = dir > 0 ? last_plus : last_minus;
            if (last >= 0 && t - last < refractory_ms) continue;
            last = t;
            out.push_back({t, dir});
        }
    }
    return out;
}

}  // namespace twinline::testing
