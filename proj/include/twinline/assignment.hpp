// Exact bipartite assignment on small dense cost matrices.
//
// Frame-level object counts are small (dozens at most), so an O(n^3)
// Kuhn-Munkres solver is affordable and fully deterministic.
#pragma once

#include <limits>
#include <utility>
#include <vector>

#include "twinline/core.hpp"

namespace twinline {

// Minimum-cost row->column assignment of a rectangular cost matrix.
// The matrix is padded internally to square; rows assigned to a padding
// column come back as -1. Empty input yields an empty result.
inline std::vector<int> solve_assignment(const std::vector<std::vector<double>>& cost,
                                         double pad_cost = 0.0) {
    const int rows = static_cast<int>(cost.size());
    const int cols = rows > 0 ? static_cast<int>(cost[0].size()) : 0;
    if (rows == 0 || cols == 0) return std::vector<int>(rows, -1);
    const int n = std::max(rows, cols);

    auto at = [&](int i, int j) -> double {
        if (i < rows && j < cols) return cost[i][j];
        return pad_cost;
    };

    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, kInf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = 0;
            double delta = kInf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = at(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<int> row_to_col(rows, -1);
    for (int j = 1; j <= n; ++j) {
        const int i = p[j];
        if (i >= 1 && i <= rows && j <= cols) row_to_col[i - 1] = j - 1;
    }
    return row_to_col;
}

struct IouMatches {
    std::vector<std::pair<int, int>> pairs;  // (row index, col index)
    std::vector<int> unmatched_rows;
    std::vector<int> unmatched_cols;
};

// One-to-one matching maximizing total IoU, then filtered by `gate`: pairs
// below the gate are released back to the unmatched sets. Ties between
// equal-total assignments are nudged toward lower (row, col) indices.
inline IouMatches match_by_max_iou(const std::vector<BoundingBox>& rows,
                                   const std::vector<BoundingBox>& cols, double gate) {
    IouMatches out;
    const int nr = static_cast<int>(rows.size());
    const int nc = static_cast<int>(cols.size());
    if (nr == 0 || nc == 0) {
        for (int i = 0; i < nr; ++i) out.unmatched_rows.push_back(i);
        for (int j = 0; j < nc; ++j) out.unmatched_cols.push_back(j);
        return out;
    }

    std::vector<std::vector<double>> score(nr, std::vector<double>(nc, 0.0));
    std::vector<std::vector<double>> costm(nr, std::vector<double>(nc, 0.0));
    constexpr double kTieEps = 1e-9;
    for (int i = 0; i < nr; ++i) {
        for (int j = 0; j < nc; ++j) {
            const double s = iou(rows[i], cols[j]);
            score[i][j] = s;
            double pref = 0.0;
            const int idx = i * nc + j;
            if (idx < 512) pref = kTieEps * std::pow(0.5, idx);
            costm[i][j] = 1.0 - s - pref;
        }
    }

    const auto row_to_col = solve_assignment(costm, 1.0);
    std::vector<char> col_taken(nc, 0);
    for (int i = 0; i < nr; ++i) {
        const int j = row_to_col[i];
        if (j >= 0 && score[i][j] >= gate) {
            out.pairs.emplace_back(i, j);
            col_taken[j] = 1;
        } else {
            out.unmatched_rows.push_back(i);
        }
    }
    for (int j = 0; j < nc; ++j) {
        if (!col_taken[j]) out.unmatched_cols.push_back(j);
    }
    return out;
}

}  // namespace twinline
