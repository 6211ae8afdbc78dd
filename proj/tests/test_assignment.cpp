#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>
#include <random>

#include "twinline/assignment.hpp"

using namespace twinline;

namespace {

// exhaustive minimum over all row->col injections (test-side oracle)
double brute_force_min_cost(const std::vector<std::vector<double>>& cost) {
    const int rows = static_cast<int>(cost.size());
    const int cols = static_cast<int>(cost[0].size());
    std::vector<int> perm(static_cast<std::size_t>(std::max(rows, cols)));
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (int i = 0; i < rows; ++i) {
            if (perm[static_cast<std::size_t>(i)] < cols)
                total += cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
        }
        best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

double assignment_cost(const std::vector<std::vector<double>>& cost,
                       const std::vector<int>& row_to_col) {
    double total = 0.0;
    for (std::size_t i = 0; i < row_to_col.size(); ++i) {
        if (row_to_col[i] >= 0) total += cost[i][static_cast<std::size_t>(row_to_col[i])];
    }
    return total;
}

}  // namespace

TEST_CASE("assignment matches the brute-force oracle on random matrices") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> val(0.0, 1.0);
    std::uniform_int_distribution<int> dim(1, 6);
    for (int trial = 0; trial < 200; ++trial) {
        const int rows = dim(rng), cols = dim(rng);
        std::vector<std::vector<double>> cost(static_cast<std::size_t>(rows),
                                              std::vector<double>(static_cast<std::size_t>(cols)));
        for (auto& r : cost)
            for (auto& c : r) c = val(rng);
        const auto sol = solve_assignment(cost, 0.0);
        // solution must be a valid partial injection covering min(rows, cols)
        std::vector<char> used(static_cast<std::size_t>(cols), 0);
        int assigned = 0;
        for (int j : sol) {
            if (j < 0) continue;
            REQUIRE(j < cols);
            REQUIRE(!used[static_cast<std::size_t>(j)]);
            used[static_cast<std::size_t>(j)] = 1;
            ++assigned;
        }
        CHECK(assigned == std::min(rows, cols));
        CHECK(assignment_cost(cost, sol) ==
              Catch::Approx(brute_force_min_cost(cost)).margin(1e-9));
    }
}

TEST_CASE("crossed IoU pairs resolve to the straight pairing") {
    // literal IoU matrix {(0.9, 0.2), (0.3, 0.8)}: straight total 1.7 beats
    // the 0.5 crossed alternative
    const std::vector<std::vector<double>> cost{{1.0 - 0.9, 1.0 - 0.2}, {1.0 - 0.3, 1.0 - 0.8}};
    CHECK(solve_assignment(cost, 1.0) == std::vector<int>{0, 1});

    // same decision through boxes, checked against both possible pairings
    const BoundingBox t0{0, 0, 10, 10}, t1{4, 0, 14, 10};
    const BoundingBox d0{1, 0, 11, 10}, d1{5, 0, 15, 10};
    const double straight = iou(t0, d0) + iou(t1, d1);
    const double crossed = iou(t0, d1) + iou(t1, d0);
    REQUIRE(straight > crossed);
    const auto m = match_by_max_iou({t0, t1}, {d0, d1}, 0.01);
    REQUIRE(m.pairs.size() == 2);
    CHECK(m.pairs[0] == std::pair<int, int>{0, 0});
    CHECK(m.pairs[1] == std::pair<int, int>{1, 1});
}

TEST_CASE("gate releases weak pairs") {
    const BoundingBox t0{0, 0, 10, 10};
    const BoundingBox d_far{9, 9, 19, 19};  // small IoU
    const double weak = iou(t0, d_far);
    REQUIRE(weak < 0.1);
    const auto m = match_by_max_iou({t0}, {d_far}, 0.3);
    CHECK(m.pairs.empty());
    CHECK(m.unmatched_rows == std::vector<int>{0});
    CHECK(m.unmatched_cols == std::vector<int>{0});
}

TEST_CASE("one detection shared by two tracks goes to the better track") {
    const BoundingBox strong{0, 0, 10, 10};
    const BoundingBox weak{3, 0, 13, 10};
    const BoundingBox det{1, 0, 11, 10};
    const auto m = match_by_max_iou({weak, strong}, {det}, 0.1);
    REQUIRE(m.pairs.size() == 1);
    CHECK(m.pairs[0].first == 1);
    CHECK(m.unmatched_rows == std::vector<int>{0});
}

TEST_CASE("empty inputs") {
    const auto m1 = match_by_max_iou({}, {}, 0.5);
    CHECK(m1.pairs.empty());
    const auto m2 = match_by_max_iou({}, {{0, 0, 1, 1}}, 0.5);
    CHECK(m2.unmatched_cols == std::vector<int>{0});
    const auto m3 = match_by_max_iou({{0, 0, 1, 1}}, {}, 0.5);
    CHECK(m3.unmatched_rows == std::vector<int>{0});
}
