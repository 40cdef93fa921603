#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cips3d/params.hpp"

namespace cips3d {

struct AdamOptions {
  double lr = 2e-4;
  double beta0 = 0.0;
  double beta1 = 0.999;
  double eps = 1e-8;
  /// Parameters whose name starts with the prefix get lr * multiplier.
  std::vector<std::pair<std::string, double>> lr_multipliers;
};

/// Adam over a ParamSet. Tensors that are not trainable or received no
/// gradient are left untouched and keep their moment state.
template <typename T>
class Adam {
 public:
  explicit Adam(AdamOptions options) : options_(std::move(options)) {}

  void step(ParamSet<T>& params);
  double lr_for(const std::string& name) const;
  const AdamOptions& options() const { return options_; }
  void set_lr(double lr) { options_.lr = lr; }

 private:
  struct Moments {
    std::vector<double> m, v;
    std::size_t steps = 0;
  };
  AdamOptions options_;
  std::map<std::string, Moments> state_;
};

}  // namespace cips3d
