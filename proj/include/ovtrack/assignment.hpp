#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "ovtrack/types.hpp"

namespace ovtrack {

// Dense row-major cost matrix. Entries are finite costs (lower is better) or
// kForbidden for pairs that must never be matched.
struct CostMatrix {
  static constexpr double kForbidden = std::numeric_limits<double>::infinity();

  int rows = 0;
  int cols = 0;
  std::vector<double> values;  // rows * cols, row-major

  CostMatrix() = default;
  CostMatrix(int rows_, int cols_, double fill = 0.0);

  double& at(int r, int c) { return values[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return values[static_cast<size_t>(r) * cols + c]; }
};

struct Assignment {
  std::vector<std::pair<int, int>> pairs;  // (row, col), sorted by row
  std::vector<int> unmatched_rows;
  std::vector<int> unmatched_cols;
  double total_cost = 0.0;
};

// Minimum-cost one-to-one assignment (Kuhn-Munkres with potentials).
// Rectangular matrices are padded internally; forbidden entries are never
// part of the result, so fewer than min(rows, cols) pairs may be returned
// when forbidden entries block a full matching. Deterministic: ties resolve
// by the row-major traversal order. Throws std::invalid_argument on NaN or
// -inf entries.
Assignment hungarian(const CostMatrix& costs);

// Class-agnostic ground-truth track-ID assignment: cost 1 - iou_3d, pairs
// with iou_3d < iou_min forbidden, Hungarian one-to-one matching. Returns
// detection index -> track id; unmatched detections are absent from the map.
// Requires iou_min in (0, 1).
std::map<int, int64_t> assign_gt_track_ids(
    std::span<const std::pair<Box3D, int64_t>> gt_boxes,
    std::span<const Detection3D> detections, double iou_min);

}  // namespace ovtrack
