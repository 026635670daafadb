#pragma once

#include <cstddef>
#include <vector>

#include "radocc/heads.hpp"
#include "radocc/tensor.hpp"

namespace radocc {

/// row_to_col[r] is the column assigned to row r; cost is the summed cost of
/// the chosen entries in row order.
struct Assignment {
  std::vector<std::size_t> row_to_col;
  double cost = 0.0;
};

/// Minimum-cost assignment of every row of a rows x cols matrix (rows <= cols)
/// to a distinct column. Shortest augmenting paths with potentials, O(n^2 m).
/// Ties resolve deterministically in scan order.
Assignment solve_assignment(const Tensor& cost);

/// lambda_cls * -log p_pred(gt class) + lambda_reg * L1(box params).
double matching_cost(const Box3D& pred, const Box3D& gt, double lambda_cls, double lambda_reg);

/// Rows are ground-truth boxes, columns predictions. Throws
/// std::invalid_argument when there are more ground-truth boxes than
/// predictions.
Assignment hungarian_match(const BoxSet& preds, const BoxSet& gt, double lambda_cls,
                           double lambda_reg);

}  // namespace radocc
