#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "cips3d/tensor.hpp"

namespace cips3d::ad {

struct GradReport {
  double max_abs_err = 0.0;
  double max_rel_err = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  /// False when the function produced a non-finite value; `failure` says where.
  bool finite = true;
  std::string failure;

  bool passed(double rel_tol) const { return finite && max_rel_err < rel_tol; }
};

template <typename T>
using NamedTensors = std::vector<std::pair<std::string, Tensor<T>>>;

/// Compares backward() against central differences for every element of
/// every parameter that requires grad; others are skipped. `fn` must read the
/// parameters through the given handles and be deterministic.
///
/// Relative error per element is |analytic - numeric| / max(|analytic|, |numeric|, 1e-12).
template <typename T>
GradReport finite_diff_check(const std::function<Tensor<T>()>& fn, const NamedTensors<T>& params, T eps);

}  // namespace cips3d::ad
