#include "cips3d/optimizer.hpp"

#include <cmath>

namespace cips3d {

template <typename T>
double Adam<T>::lr_for(const std::string& name) const {
  double lr = options_.lr;
  for (const auto& [prefix, mult] : options_.lr_multipliers)
    if (name.starts_with(prefix)) lr *= mult;
  return lr;
}

template <typename T>
void Adam<T>::step(ParamSet<T>& params) {
  const double b0 = options_.beta0, b1 = options_.beta1;
  for (const auto& name : params.names()) {
    const auto& entry = params.entry(name);
    if (!entry.trainable || !entry.tensor.has_grad()) continue;
    auto tensor = entry.tensor;
    const auto g = tensor.grad();
    auto p = tensor.mutable_data();
    auto& s = state_[name];
    if (s.m.empty()) {
      s.m.assign(p.size(), 0.0);
      s.v.assign(p.size(), 0.0);
    }
    ++s.steps;
    const double c0 = 1.0 - std::pow(b0, static_cast<double>(s.steps));
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(s.steps));
    const double lr = lr_for(name);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = static_cast<double>(g[i]);
      s.m[i] = b0 * s.m[i] + (1.0 - b0) * gi;
      s.v[i] = b1 * s.v[i] + (1.0 - b1) * gi * gi;
      const double update = lr * (s.m[i] / c0) / (std::sqrt(s.v[i] / c1) + options_.eps);
      p[i] = static_cast<T>(static_cast<double>(p[i]) - update);
    }
  }
}

template class Adam<float>;
template class Adam<double>;

}  // namespace cips3d
