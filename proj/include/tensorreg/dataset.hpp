#pragma once

#include "tensorreg/glm.hpp"
#include "tensorreg/tensor.hpp"

#include <vector>

namespace tensorreg {

/// Regression data: response y, tensor covariates x (one per observation,
/// shared dimensions), and an optional n x p_0 matrix z of regular
/// covariates (zero columns when absent).
struct Dataset {
  Vector y;
  std::vector<DenseTensor> x;
  Matrix z;

  Index n() const { return y.size(); }
  bool has_z() const { return z.cols() > 0; }
  std::vector<Index> xdims() const;
  void validate() const;
};

}  // namespace tensorreg
