#include "ovtrack/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ovtrack {

CostMatrix::CostMatrix(int rows_, int cols_, double fill)
    : rows(rows_), cols(cols_), values(static_cast<size_t>(rows_) * cols_, fill) {
  if (rows_ < 0 || cols_ < 0) {
    throw std::invalid_argument("CostMatrix: negative dimensions");
  }
}

Assignment hungarian(const CostMatrix& costs) {
  for (double v : costs.values) {
    if (std::isnan(v) || v == -std::numeric_limits<double>::infinity()) {
      throw std::invalid_argument("hungarian: entries must be finite or kForbidden");
    }
  }

  Assignment out;
  if (costs.rows == 0 || costs.cols == 0) {
    for (int r = 0; r < costs.rows; ++r) out.unmatched_rows.push_back(r);
    for (int c = 0; c < costs.cols; ++c) out.unmatched_cols.push_back(c);
    return out;
  }

  // Solve with n <= m by transposing when needed.
  const bool transposed = costs.rows > costs.cols;
  const int n = transposed ? costs.cols : costs.rows;
  const int m = transposed ? costs.rows : costs.cols;
  const auto cost_at = [&](int i, int j) {
    return transposed ? costs.at(j, i) : costs.at(i, j);
  };

  // Replace forbidden entries by a finite sentinel large enough that any
  // matching avoiding one more forbidden cell is always preferred.
  double max_abs = 0.0;
  for (double v : costs.values) {
    if (std::isfinite(v)) max_abs = std::max(max_abs, std::abs(v));
  }
  const double big = (max_abs + 1.0) * 2.0 * (n + m + 1);
  const auto a = [&](int i, int j) {
    const double v = cost_at(i, j);
    return std::isfinite(v) ? v : big;
  };

  // Shortest augmenting path formulation with row/column potentials
  // (1-indexed; column 0 is the virtual source).
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = -1;
      double delta = inf;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
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

  std::vector<char> row_matched(costs.rows, 0), col_matched(costs.cols, 0);
  for (int j = 1; j <= m; ++j) {
    const int i = p[j];
    if (i == 0) continue;
    const int r = transposed ? j - 1 : i - 1;
    const int c = transposed ? i - 1 : j - 1;
    if (!std::isfinite(costs.at(r, c))) continue;  // forbidden: leave unmatched
    out.pairs.emplace_back(r, c);
    row_matched[r] = 1;
    col_matched[c] = 1;
  }
  std::sort(out.pairs.begin(), out.pairs.end());
  for (const auto& [r, c] : out.pairs) out.total_cost += costs.at(r, c);
  for (int r = 0; r < costs.rows; ++r) {
    if (!row_matched[r]) out.unmatched_rows.push_back(r);
  }
  for (int c = 0; c < costs.cols; ++c) {
    if (!col_matched[c]) out.unmatched_cols.push_back(c);
  }
  return out;
}

std::map<int, int64_t> assign_gt_track_ids(
    std::span<const std::pair<Box3D, int64_t>> gt_boxes,
    std::span<const Detection3D> detections, double iou_min) {
  if (!(iou_min > 0.0) || !(iou_min < 1.0)) {
    throw std::invalid_argument("assign_gt_track_ids: iou_min must lie in (0, 1)");
  }
  CostMatrix costs(static_cast<int>(detections.size()), static_cast<int>(gt_boxes.size()));
  for (size_t d = 0; d < detections.size(); ++d) {
    for (size_t g = 0; g < gt_boxes.size(); ++g) {
      const double iou = iou_3d(detections[d].box, gt_boxes[g].first);
      costs.at(static_cast<int>(d), static_cast<int>(g)) =
          iou < iou_min ? CostMatrix::kForbidden : 1.0 - iou;
    }
  }
  const Assignment assignment = hungarian(costs);
  std::map<int, int64_t> ids;
  for (const auto& [d, g] : assignment.pairs) {
    ids.emplace(d, gt_boxes[static_cast<size_t>(g)].second);
  }
  return ids;
}

}  // namespace ovtrack
