#include "cips3d/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <unordered_set>
#include <utility>

#include "cips3d/ops.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace cips3d::ad {
namespace {
thread_local bool g_grad_enabled = true;

#if defined(__GLIBC__)
// Keep large activation buffers on the heap so repeated forwards reuse pages
// instead of paying mmap/munmap and first-touch faults on every allocation.
[[maybe_unused]] const bool g_malloc_tuned = [] {
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  return true;
}();
#endif
}  // namespace

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

bool grad_enabled() { return g_grad_enabled; }

GradModeGuard::GradModeGuard(bool enabled) : previous_(g_grad_enabled) { g_grad_enabled = enabled; }
GradModeGuard::~GradModeGuard() { g_grad_enabled = previous_; }

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill) : impl_(std::make_shared<Impl>()) {
  const std::size_t n = shape_numel(shape);
  impl_->shape = std::move(shape);
  impl_->storage = std::make_shared<std::vector<T>>(n, fill);
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values) : impl_(std::make_shared<Impl>()) {
  if (shape_numel(shape) != values.size())
    throw std::invalid_argument("tensor: " + std::to_string(values.size()) +
                                " values do not fill shape " + shape_str(shape));
  impl_->shape = std::move(shape);
  impl_->storage = std::make_shared<std::vector<T>>(std::move(values));
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) throw std::invalid_argument("item: tensor of shape " + shape_str(shape()));
  return (*impl_->storage)[0];
}

template <typename T>
Tensor<T>& Tensor<T>::set_requires_grad(bool on) {
  if (!is_leaf() && !on) throw std::logic_error("set_requires_grad(false) on a non-leaf tensor");
  impl_->requires_grad = on;
  return *this;
}

template <typename T>
void Tensor<T>::accumulate_grad(std::span<const T> g) {
  if (g.size() != numel()) throw std::invalid_argument("accumulate_grad: size mismatch");
  if (impl_->grad.empty()) {
    impl_->grad.assign(g.begin(), g.end());
    return;
  }
  for (std::size_t i = 0; i < g.size(); ++i) impl_->grad[i] += g[i];
}

template <typename T>
Tensor<T> Tensor<T>::grad_tensor() const {
  if (impl_->grad.empty()) return Tensor(shape());
  return Tensor(shape(), impl_->grad);
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  return view_of(*this, shape());
}

template <typename T>
Tensor<T> Tensor<T>::clone() const {
  return Tensor(shape(), std::vector<T>(data().begin(), data().end()));
}

template <typename T>
Tensor<T> Tensor<T>::view_of(const Tensor& base, Shape shape) {
  if (shape_numel(shape) != base.numel())
    throw std::invalid_argument("reshape: " + shape_str(base.shape()) + " -> " + shape_str(shape));
  Tensor out;
  out.impl_ = std::make_shared<Impl>();
  out.impl_->shape = std::move(shape);
  out.impl_->storage = base.impl_->storage;
  return out;
}

template <typename T>
void Tensor<T>::attach(const char* op, std::vector<Tensor> inputs, BackwardFn<T> backward) {
  auto node = std::make_shared<GradNode<T>>();
  node->op = op;
  node->inputs = std::move(inputs);
  node->backward = std::move(backward);
  impl_->node = std::move(node);
  impl_->requires_grad = true;
}

namespace {

// Post-order over recorded nodes reachable from root.
template <typename T>
std::vector<Tensor<T>> topo_order(const Tensor<T>& root) {
  std::vector<Tensor<T>> order;
  if (!root.requires_grad() || root.is_leaf()) return order;
  enum class Mark { active, done };
  std::unordered_map<const void*, Mark> marks;
  struct Frame {
    Tensor<T> t;
    std::size_t next = 0;
  };
  std::vector<Frame> stack;
  stack.push_back({root, 0});
  marks[root.id()] = Mark::active;
  while (!stack.empty()) {
    Frame& f = stack.back();
    const auto& inputs = f.t.grad_node()->inputs;
    if (f.next < inputs.size()) {
      const Tensor<T>& in = inputs[f.next++];
      if (!in.requires_grad() || in.is_leaf()) continue;
      auto it = marks.find(in.id());
      if (it != marks.end()) {
        if (it->second == Mark::active) throw std::logic_error("backward: cycle in autodiff graph");
        continue;
      }
      marks[in.id()] = Mark::active;
      stack.push_back({in, 0});
      continue;
    }
    marks[f.t.id()] = Mark::done;
    order.push_back(f.t);
    stack.pop_back();
  }
  return order;
}

template <typename T>
struct BackwardResult {
  std::unordered_map<const void*, Tensor<T>> grads;
  std::vector<Tensor<T>> leaves;  // in first-reached order
};

template <typename T>
BackwardResult<T> run_backward(const Tensor<T>& root, bool create_graph,
                               const std::unordered_set<const void*>& keep) {
  GradModeGuard mode(create_graph);
  BackwardResult<T> result;
  auto& grads = result.grads;
  std::unordered_set<const void*> leaf_seen;
  const auto order = topo_order(root);
  grads.emplace(root.id(), Tensor<T>(root.shape(), T{1}));
  if (root.is_leaf()) {
    if (root.requires_grad()) result.leaves.push_back(root);
    return result;
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const Tensor<T>& t = *it;
    auto g_it = grads.find(t.id());
    if (g_it == grads.end()) continue;
    const Tensor<T> g = g_it->second;
    if (!keep.count(t.id())) grads.erase(g_it);
    const auto& node = *t.grad_node();
    auto input_grads = node.backward(g);
    for (std::size_t i = 0; i < node.inputs.size(); ++i) {
      const Tensor<T>& in = node.inputs[i];
      if (!in.requires_grad() || i >= input_grads.size() || !input_grads[i].defined()) continue;
      auto existing = grads.find(in.id());
      if (existing == grads.end()) {
        grads.emplace(in.id(), input_grads[i]);
      } else {
        existing->second = add(existing->second, input_grads[i]);
      }
      if (in.is_leaf() && leaf_seen.insert(in.id()).second) result.leaves.push_back(in);
    }
  }
  return result;
}

}  // namespace

template <typename T>
void backward(const Tensor<T>& loss) {
  if (loss.numel() != 1)
    throw std::invalid_argument("backward: loss must be a scalar, got shape " + shape_str(loss.shape()));
  if (!loss.requires_grad()) return;
  auto result = run_backward(loss, false, {});
  for (auto& leaf : result.leaves) {
    auto it = result.grads.find(leaf.id());
    if (it != result.grads.end()) leaf.accumulate_grad(it->second.data());
  }
}

template <typename T>
std::vector<Tensor<T>> grad(const Tensor<T>& output, const std::vector<Tensor<T>>& inputs,
                            bool create_graph) {
  if (output.numel() != 1)
    throw std::invalid_argument("grad: output must be a scalar, got shape " + shape_str(output.shape()));
  std::vector<Tensor<T>> out;
  out.reserve(inputs.size());
  if (!output.requires_grad()) {
    for (const auto& in : inputs) out.emplace_back(in.shape());
    return out;
  }
  std::unordered_set<const void*> keep;
  for (const auto& in : inputs) keep.insert(in.id());
  auto result = run_backward(output, create_graph, keep);
  for (const auto& in : inputs) {
    auto it = result.grads.find(in.id());
    out.push_back(it == result.grads.end() ? Tensor<T>(in.shape()) : it->second);
  }
  return out;
}

template <typename T>
GraphStats graph_stats(const Tensor<T>& root) {
  GraphStats stats;
  for (const auto& t : topo_order(root)) {
    ++stats.nodes;
    stats.tracked_elements += t.numel();
  }
  return stats;
}

template class Tensor<float>;
template class Tensor<double>;
template void backward<float>(const Tensor<float>&);
template void backward<double>(const Tensor<double>&);
template std::vector<Tensor<float>> grad<float>(const Tensor<float>&, const std::vector<Tensor<float>>&, bool);
template std::vector<Tensor<double>> grad<double>(const Tensor<double>&, const std::vector<Tensor<double>>&, bool);
template GraphStats graph_stats<float>(const Tensor<float>&);
template GraphStats graph_stats<double>(const Tensor<double>&);

}  // namespace cips3d::ad
