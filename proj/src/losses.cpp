#include "cips3d/losses.hpp"

#include <stdexcept>

namespace cips3d {

template <typename T>
ad::Tensor<T> discriminator_loss(const ad::Tensor<T>& real_logits, const ad::Tensor<T>& fake_logits) {
  return ad::add(ad::mean(ad::softplus(ad::neg(real_logits))), ad::mean(ad::softplus(fake_logits)));
}

template <typename T>
ad::Tensor<T> generator_loss(const ad::Tensor<T>& fake_logits) {
  return ad::mean(ad::softplus(ad::neg(fake_logits)));
}

template <typename T>
GanLosses<T> nonsaturating_losses(const ad::Tensor<T>& real_logits, const ad::Tensor<T>& fake_logits) {
  return {discriminator_loss(real_logits, fake_logits), generator_loss(fake_logits)};
}

template <typename T>
ad::Tensor<T> r1_penalty(const Critic<T>& critic, const ad::Tensor<T>& reals, T gamma) {
  if (reals.rank() == 0 || reals.dim(0) == 0) throw std::invalid_argument("r1_penalty: empty batch");
  ad::GradModeGuard tracking(true);
  auto x = reals.detach();
  x.set_requires_grad(true);
  const auto logits = critic(x);
  const auto g = ad::grad(ad::sum(logits), {x}, true).front();
  const T factor = gamma / T{2} / static_cast<T>(reals.dim(0));
  return ad::scale(ad::sum(ad::square(g)), factor);
}

#define CIPS3D_INSTANTIATE_LOSSES(T)                                                               \
  template ad::Tensor<T> discriminator_loss<T>(const ad::Tensor<T>&, const ad::Tensor<T>&);        \
  template ad::Tensor<T> generator_loss<T>(const ad::Tensor<T>&);                                  \
  template GanLosses<T> nonsaturating_losses<T>(const ad::Tensor<T>&, const ad::Tensor<T>&);       \
  template ad::Tensor<T> r1_penalty<T>(const Critic<T>&, const ad::Tensor<T>&, T);

CIPS3D_INSTANTIATE_LOSSES(float)
CIPS3D_INSTANTIATE_LOSSES(double)

}  // namespace cips3d
