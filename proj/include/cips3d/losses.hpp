#pragma once

#include <functional>

#include "cips3d/ops.hpp"

namespace cips3d {

template <typename T>
struct GanLosses {
  ad::Tensor<T> loss_d;  // mean(softplus(-real)) + mean(softplus(fake))
  ad::Tensor<T> loss_g;  // mean(softplus(-fake))
};

/// Non-saturating logistic losses from logits [B].
template <typename T>
GanLosses<T> nonsaturating_losses(const ad::Tensor<T>& real_logits, const ad::Tensor<T>& fake_logits);

template <typename T>
ad::Tensor<T> discriminator_loss(const ad::Tensor<T>& real_logits, const ad::Tensor<T>& fake_logits);

template <typename T>
ad::Tensor<T> generator_loss(const ad::Tensor<T>& fake_logits);

template <typename T>
using Critic = std::function<ad::Tensor<T>(const ad::Tensor<T>&)>;

/// (gamma / 2) * mean over the batch of |d D(x) / d x|^2 at the real images.
/// Differentiable with respect to D's parameters.
template <typename T>
ad::Tensor<T> r1_penalty(const Critic<T>& critic, const ad::Tensor<T>& reals, T gamma);

}  // namespace cips3d
