#include "cips3d/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cips3d::ad {

template <typename T>
GradReport finite_diff_check(const std::function<Tensor<T>()>& fn, const NamedTensors<T>& params, T eps) {
  if (!(eps > 0)) throw std::invalid_argument("finite_diff_check: eps must be positive");
  GradReport report;

  for (const auto& [name, p] : params) {
    auto t = p;
    t.zero_grad();
  }
  const Tensor<T> loss = fn();
  if (!std::isfinite(static_cast<double>(loss.item()))) {
    report.finite = false;
    report.failure = "non-finite loss at the unperturbed parameters";
    return report;
  }
  backward(loss);

  NoGradGuard no_grad;
  for (const auto& [name, param] : params) {
    if (!param.requires_grad()) continue;
    Tensor<T> p = param;
    const std::vector<T> analytic = p.has_grad() ? std::vector<T>(p.grad().begin(), p.grad().end())
                                                 : std::vector<T>(p.numel(), T{0});
    auto values = p.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const T original = values[i];
      values[i] = original + eps;
      const double plus = static_cast<double>(fn().item());
      values[i] = original - eps;
      const double minus = static_cast<double>(fn().item());
      values[i] = original;
      if (!std::isfinite(plus) || !std::isfinite(minus)) {
        report.finite = false;
        report.failure = "non-finite output perturbing " + name + "[" + std::to_string(i) + "]";
        report.worst_param = name;
        report.worst_index = i;
        return report;
      }
      const double numeric = (plus - minus) / (2.0 * static_cast<double>(eps));
      const double a = static_cast<double>(analytic[i]);
      const double abs_err = std::abs(a - numeric);
      const double rel_err = abs_err / std::max({std::abs(a), std::abs(numeric), 1e-12});
      report.max_abs_err = std::max(report.max_abs_err, abs_err);
      if (rel_err >= report.max_rel_err) {
        report.max_rel_err = rel_err;
        report.worst_param = name;
        report.worst_index = i;
      }
      ++report.checked;
    }
  }
  return report;
}

template GradReport finite_diff_check<float>(const std::function<Tensor<float>()>&, const NamedTensors<float>&, float);
template GradReport finite_diff_check<double>(const std::function<Tensor<double>()>&, const NamedTensors<double>&,
                                              double);

}  // namespace cips3d::ad
