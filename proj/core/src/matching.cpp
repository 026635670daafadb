#include "radocc/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace radocc {

Assignment solve_assignment(const Tensor& cost) {
  if (cost.rank() != 2) throw std::invalid_argument("solve_assignment: cost must be a matrix");
  const std::size_t n = cost.dim(0);
  const std::size_t m = cost.dim(1);
  if (n > m) {
    throw std::invalid_argument("solve_assignment: " + std::to_string(n) + " rows exceed " +
                                std::to_string(m) + " columns");
  }
  for (double v : cost.data()) {
    if (!std::isfinite(v)) throw std::invalid_argument("solve_assignment: non-finite cost");
  }
  constexpr double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials; p[j] is the row matched to column j (0 = free).
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost.at(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
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
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  Assignment a;
  a.row_to_col.assign(n, 0);
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] != 0) a.row_to_col[p[j] - 1] = j - 1;
  }
  for (std::size_t r = 0; r < n; ++r) a.cost += cost.at(r, a.row_to_col[r]);
  return a;
}

double matching_cost(const Box3D& pred, const Box3D& gt, double lambda_cls, double lambda_reg) {
  double prob = pred.score;
  if (!pred.class_probs.empty()) {
    if (gt.label < 0 || static_cast<std::size_t>(gt.label) >= pred.class_probs.size()) {
      throw std::invalid_argument("matching_cost: ground-truth label out of range");
    }
    prob = pred.class_probs[static_cast<std::size_t>(gt.label)];
  } else if (pred.label != gt.label) {
    prob = 1.0 - pred.score;
  }
  const auto a = pred.params();
  const auto b = gt.params();
  double l1 = 0.0;
  for (std::size_t i = 0; i < kBoxParams; ++i) l1 += std::abs(a[i] - b[i]);
  return lambda_cls * -std::log(std::max(prob, 1e-12)) + lambda_reg * l1;
}

Assignment hungarian_match(const BoxSet& preds, const BoxSet& gt, double lambda_cls,
                           double lambda_reg) {
  if (gt.size() > preds.size()) {
    throw std::invalid_argument("hungarian_match: " + std::to_string(gt.size()) +
                                " ground-truth boxes but only " + std::to_string(preds.size()) +
                                " predictions");
  }
  if (gt.empty()) return {};
  Tensor cost({gt.size(), preds.size()});
  for (std::size_t r = 0; r < gt.size(); ++r) {
    for (std::size_t c = 0; c < preds.size(); ++c) {
      cost.at(r, c) = matching_cost(preds[c], gt[r], lambda_cls, lambda_reg);
    }
  }
  return solve_assignment(cost);
}

}  // namespace radocc
