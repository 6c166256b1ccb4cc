#include "ovtrack/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "ovtrack/geometry.hpp"
#include "ovtrack/types.hpp"

using namespace ovtrack;

namespace {

CostMatrix make_matrix(int rows, int cols, std::initializer_list<double> vals) {
  CostMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.values.assign(vals.begin(), vals.end());
  return m;
}

CostMatrix random_matrix(oracle::Rng& rng, int rows, int cols, double forbidden_prob) {
  CostMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.values.resize(static_cast<size_t>(rows) * cols);
  for (auto& v : m.values) {
    v = rng.uniform() < forbidden_prob ? CostMatrix::kForbidden
                                       : rng.uniform(-10.0, 10.0);
  }
  return m;
}

}  // namespace

TEST_CASE("hungarian: 2x2 worked example") {
  const auto m = make_matrix(2, 2, {1.0, 2.0, 2.0, 1.0});
  const Assignment a = hungarian(m);
  REQUIRE(a.pairs.size() == 2);
  CHECK(a.pairs[0] == std::pair<int, int>(0, 0));
  CHECK(a.pairs[1] == std::pair<int, int>(1, 1));
  CHECK(a.total_cost == doctest::Approx(2.0));
  CHECK(a.unmatched_rows.empty());
  CHECK(a.unmatched_cols.empty());
}

TEST_CASE("hungarian: rectangular leaves extras unmatched") {
  // 2 rows, 3 cols: exactly one column stays unmatched.
  const auto m = make_matrix(2, 3, {5.0, 1.0, 9.0, 2.0, 7.0, 3.0});
  const Assignment a = hungarian(m);
  REQUIRE(a.pairs.size() == 2);
  CHECK(a.total_cost == doctest::Approx(1.0 + 2.0));
  CHECK(a.unmatched_rows.empty());
  REQUIRE(a.unmatched_cols.size() == 1);
  CHECK(a.unmatched_cols[0] == 2);
}

TEST_CASE("hungarian: forbidden entries are never matched") {
  const double F = CostMatrix::kForbidden;
  const auto m = make_matrix(2, 2, {F, F, F, 4.0});
  const Assignment a = hungarian(m);
  REQUIRE(a.pairs.size() == 1);
  CHECK(a.pairs[0] == std::pair<int, int>(1, 1));
  CHECK(a.total_cost == doctest::Approx(4.0));
  REQUIRE(a.unmatched_rows.size() == 1);
  CHECK(a.unmatched_rows[0] == 0);
  REQUIRE(a.unmatched_cols.size() == 1);
  CHECK(a.unmatched_cols[0] == 0);
}

TEST_CASE("hungarian: fully forbidden matrix matches nothing") {
  const double F = CostMatrix::kForbidden;
  const auto m = make_matrix(2, 2, {F, F, F, F});
  const Assignment a = hungarian(m);
  CHECK(a.pairs.empty());
  CHECK(a.total_cost == 0.0);
  CHECK(a.unmatched_rows.size() == 2);
  CHECK(a.unmatched_cols.size() == 2);
}

TEST_CASE("hungarian: empty matrix") {
  CostMatrix m;
  m.rows = 0;
  m.cols = 0;
  const Assignment a = hungarian(m);
  CHECK(a.pairs.empty());
  CHECK(a.total_cost == 0.0);
}

TEST_CASE("hungarian: rejects NaN and -inf") {
  auto m = make_matrix(1, 1, {std::numeric_limits<double>::quiet_NaN()});
  CHECK_THROWS_AS(hungarian(m), std::invalid_argument);
  m = make_matrix(1, 1, {-std::numeric_limits<double>::infinity()});
  CHECK_THROWS_AS(hungarian(m), std::invalid_argument);
}

TEST_CASE("hungarian: maximizes cardinality before minimizing cost") {
  // Matching both rows costs 100+1=101; matching only row 0 would cost 0.
  // Max cardinality wins.
  const double F = CostMatrix::kForbidden;
  const auto m = make_matrix(2, 2, {0.0, 100.0, F, 1.0});
  const Assignment a = hungarian(m);
  REQUIRE(a.pairs.size() == 2);
  CHECK(a.pairs[0] == std::pair<int, int>(0, 0));
  CHECK(a.pairs[1] == std::pair<int, int>(1, 1));
  CHECK(a.total_cost == doctest::Approx(1.0));
}

TEST_CASE("hungarian matches brute force on random matrices") {
  oracle::Rng rng(31337);
  for (int trial = 0; trial < 400; ++trial) {
    const int rows = 1 + static_cast<int>(rng.uniform(0.0, 6.999));
    const int cols = 1 + static_cast<int>(rng.uniform(0.0, 6.999));
    const double fp = (trial % 3 == 0) ? 0.3 : 0.0;
    const CostMatrix m = random_matrix(rng, rows, cols, fp);
    const Assignment got = hungarian(m);
    const oracle::BruteForceResult want = oracle::brute_force_assignment(m);
    REQUIRE(got.pairs.size() == static_cast<size_t>(want.pairs));
    // Continuous random costs make the optimum a.s. unique, so totals agree
    // to rounding of the same addends.
    CHECK(got.total_cost == doctest::Approx(want.total_cost).epsilon(1e-9));

    // Structural checks: pairs are strictly one-to-one and within range.
    std::vector<int> rs, cs;
    for (auto [r, c] : got.pairs) {
      CHECK(r >= 0);
      CHECK(r < rows);
      CHECK(c >= 0);
      CHECK(c < cols);
      CHECK(std::isfinite(m.at(r, c)));
      rs.push_back(r);
      cs.push_back(c);
    }
    std::sort(rs.begin(), rs.end());
    std::sort(cs.begin(), cs.end());
    CHECK(std::adjacent_find(rs.begin(), rs.end()) == rs.end());
    CHECK(std::adjacent_find(cs.begin(), cs.end()) == cs.end());
    CHECK(got.pairs.size() + got.unmatched_rows.size() == static_cast<size_t>(rows));
    CHECK(got.pairs.size() + got.unmatched_cols.size() == static_cast<size_t>(cols));
  }
}

TEST_CASE("hungarian is deterministic") {
  oracle::Rng rng(555);
  const CostMatrix m = random_matrix(rng, 6, 6, 0.2);
  const Assignment a = hungarian(m);
  const Assignment b = hungarian(m);
  CHECK(a.pairs == b.pairs);
  CHECK(a.unmatched_rows == b.unmatched_rows);
  CHECK(a.unmatched_cols == b.unmatched_cols);
  CHECK(a.total_cost == b.total_cost);
}

namespace {

Detection3D det_at(double x, double y, int frame = 0, int id = 0) {
  Detection3D d;
  d.box = Box3D(Eigen::Vector3d(x, y, 0.5), Eigen::Vector3d(2, 4, 1.5), 0.0);
  d.frame_index = frame;
  d.detection_id = id;
  return d;
}

}  // namespace

TEST_CASE("assign_gt_track_ids: exact overlap assigns, distant does not") {
  std::vector<std::pair<Box3D, int64_t>> gt;
  gt.emplace_back(det_at(0, 0).box, 101);
  gt.emplace_back(det_at(20, 0).box, 202);

  std::vector<Detection3D> dets = {det_at(0.1, 0.0, 0, 0), det_at(50, 50, 0, 1)};
  const auto ids = assign_gt_track_ids(gt, dets, 0.1);
  REQUIRE(ids.size() == 1);
  CHECK(ids.at(0) == 101);
  CHECK(ids.find(1) == ids.end());
}

TEST_CASE("assign_gt_track_ids: one-to-one even with crowded geometry") {
  // Two detections both overlap GT 101 heavily; only one may claim it.
  std::vector<std::pair<Box3D, int64_t>> gt;
  gt.emplace_back(det_at(0, 0).box, 101);
  std::vector<Detection3D> dets = {det_at(0.05, 0, 0, 0), det_at(-0.05, 0, 0, 1)};
  const auto ids = assign_gt_track_ids(gt, dets, 0.1);
  CHECK(ids.size() == 1);
}

TEST_CASE("assign_gt_track_ids: iou threshold is strict enough") {
  // Offset 3.0 in x on a w=2 box: zero overlap, below any positive threshold.
  std::vector<std::pair<Box3D, int64_t>> gt;
  gt.emplace_back(det_at(0, 0).box, 7);
  std::vector<Detection3D> dets = {det_at(3.0, 0, 0, 0)};
  CHECK(assign_gt_track_ids(gt, dets, 0.1).empty());
}

TEST_CASE("assign_gt_track_ids: validates iou_min") {
  std::vector<std::pair<Box3D, int64_t>> gt;
  std::vector<Detection3D> dets;
  CHECK_THROWS_AS(assign_gt_track_ids(gt, dets, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(assign_gt_track_ids(gt, dets, 1.0), std::invalid_argument);
}

TEST_CASE("assign_gt_track_ids: invariant under detection reordering") {
  oracle::Rng rng(8080);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::pair<Box3D, int64_t>> gt;
    for (int g = 0; g < 5; ++g) {
      gt.emplace_back(oracle::random_box(rng, 6.0), 1000 + g);
    }
    std::vector<Detection3D> dets;
    for (int d = 0; d < 6; ++d) {
      Detection3D det;
      det.box = oracle::random_box(rng, 6.0);
      det.frame_index = 0;
      det.detection_id = d;
      dets.push_back(det);
    }
    const auto base = assign_gt_track_ids(gt, dets, 0.1);

    std::vector<Detection3D> reversed(dets.rbegin(), dets.rend());
    const auto rev = assign_gt_track_ids(gt, reversed, 0.1);
    // Map back: reversed index i corresponds to original index n-1-i.
    std::map<int, int64_t> remapped;
    const int n = static_cast<int>(dets.size());
    for (const auto& [idx, id] : rev) remapped[n - 1 - idx] = id;
    CHECK(remapped.size() == base.size());
    // Assigned GT id sets must coincide (ties can swap which det claims which
    // GT, but random continuous IoUs make ties measure-zero).
    CHECK(remapped == base);
  }
}
