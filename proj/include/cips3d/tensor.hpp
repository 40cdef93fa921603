#pragma once

// Dense tensors with a reverse-mode tape.
//
// A Tensor is a shared handle: copies alias the same storage and gradient
// node. Results of recorded operations keep their inputs alive through the
// backward closure, so the graph lives exactly as long as its outputs.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace cips3d::ad {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Whether newly created operation results record a backward edge.
bool grad_enabled();

class GradModeGuard {
 public:
  explicit GradModeGuard(bool enabled);
  ~GradModeGuard();
  GradModeGuard(const GradModeGuard&) = delete;
  GradModeGuard& operator=(const GradModeGuard&) = delete;

 private:
  bool previous_;
};

class NoGradGuard : public GradModeGuard {
 public:
  NoGradGuard() : GradModeGuard(false) {}
};

template <typename T>
class Tensor;

template <typename T>
using BackwardFn = std::function<std::vector<Tensor<T>>(const Tensor<T>& grad_out)>;

template <typename T>
struct GradNode {
  const char* op = "";
  std::vector<Tensor<T>> inputs;
  BackwardFn<T> backward;
};

template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T{0});
  Tensor(Shape shape, std::vector<T> values);

  static Tensor scalar(T value) { return Tensor(Shape{}, std::vector<T>{value}); }

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return impl_->shape.at(axis); }
  std::size_t numel() const { return impl_->storage->size(); }

  std::span<const T> data() const { return {impl_->storage->data(), impl_->storage->size()}; }
  std::span<T> mutable_data() { return {impl_->storage->data(), impl_->storage->size()}; }
  T item() const;

  bool requires_grad() const { return impl_->requires_grad; }
  Tensor& set_requires_grad(bool on);
  bool is_leaf() const { return impl_->node == nullptr; }

  bool has_grad() const { return !impl_->grad.empty(); }
  /// Accumulated gradient; empty span when nothing has been accumulated.
  std::span<const T> grad() const { return {impl_->grad.data(), impl_->grad.size()}; }
  void zero_grad() { impl_->grad.clear(); }
  void accumulate_grad(std::span<const T> g);
  Tensor grad_tensor() const;

  /// Same storage, no history.
  Tensor detach() const;
  /// Deep copy of the values, no history.
  Tensor clone() const;

  const std::shared_ptr<GradNode<T>>& grad_node() const { return impl_->node; }
  const void* id() const { return impl_.get(); }
  bool shares_storage(const Tensor& other) const { return impl_->storage == other.impl_->storage; }

  // Used by operation implementations.
  static Tensor view_of(const Tensor& base, Shape shape);
  void attach(const char* op, std::vector<Tensor> inputs, BackwardFn<T> backward);

 private:
  struct Impl {
    Shape shape;
    std::shared_ptr<std::vector<T>> storage;
    std::vector<T> grad;
    bool requires_grad = false;
    std::shared_ptr<GradNode<T>> node;
  };
  std::shared_ptr<Impl> impl_;
};

/// Accumulate d(loss)/d(leaf) into every reachable leaf with requires_grad.
/// Repeated calls accumulate; reset with zero_grad.
template <typename T>
void backward(const Tensor<T>& loss);

/// Gradients of `output` (a scalar) w.r.t. `inputs`, returned rather than
/// accumulated. With create_graph the returned tensors carry their own history
/// so they can be differentiated again.
template <typename T>
std::vector<Tensor<T>> grad(const Tensor<T>& output, const std::vector<Tensor<T>>& inputs,
                            bool create_graph = false);

struct GraphStats {
  std::size_t nodes = 0;
  /// Sum of element counts over all recorded (tracked) node outputs.
  std::size_t tracked_elements = 0;
};

template <typename T>
GraphStats graph_stats(const Tensor<T>& root);

}  // namespace cips3d::ad
