#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cips3d/gradcheck.hpp"
#include "cips3d/tensor.hpp"

namespace cips3d {

/// Leading component of a dotted parameter name ("nerf" for "nerf.pe.weight").
inline std::string_view name_space(std::string_view name) { return name.substr(0, name.find('.')); }

/// Named, ordered parameter collection. Iteration is sorted by name, which is
/// also the checkpoint order. `trainable` is the persistent flag; the tensors'
/// requires_grad follows it except inside a FrozenScope.
template <typename T>
class ParamSet {
 public:
  struct Entry {
    ad::Tensor<T> tensor;
    bool trainable = true;
  };

  void add(const std::string& name, ad::Tensor<T> tensor, bool trainable = true) {
    if (entries_.count(name)) throw std::invalid_argument("duplicate parameter " + name);
    tensor.set_requires_grad(trainable);
    entries_.emplace(name, Entry{std::move(tensor), trainable});
  }

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  std::size_t size() const { return entries_.size(); }

  const ad::Tensor<T>& at(const std::string& name) const { return find(name).tensor; }
  ad::Tensor<T>& at(const std::string& name) { return find(name).tensor; }
  const Entry& entry(const std::string& name) const { return find(name); }

  const std::map<std::string, Entry>& entries() const { return entries_; }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [name, e] : entries_) out.push_back(name);
    return out;
  }

  void set_trainable(const std::string& name, bool on) {
    auto& e = find(name);
    e.trainable = on;
    e.tensor.set_requires_grad(on);
  }

  void zero_grads() {
    for (auto& [name, e] : entries_) e.tensor.zero_grad();
  }

  /// name -> accumulated gradient (zeros where nothing was accumulated).
  std::map<std::string, std::vector<T>> gradients() const {
    std::map<std::string, std::vector<T>> out;
    for (const auto& [name, e] : entries_) {
      const auto g = e.tensor.grad();
      out[name] = g.empty() ? std::vector<T>(e.tensor.numel(), T{0}) : std::vector<T>(g.begin(), g.end());
    }
    return out;
  }

  std::size_t element_count() const {
    std::size_t n = 0;
    for (const auto& [name, e] : entries_) n += e.tensor.numel();
    return n;
  }

  /// Deep copy with fresh tensors and no gradients.
  ParamSet clone() const {
    ParamSet out;
    for (const auto& [name, e] : entries_) out.add(name, e.tensor.clone(), e.trainable);
    return out;
  }

  template <typename U>
  ParamSet<U> cast() const {
    ParamSet<U> out;
    for (const auto& [name, e] : entries_) {
      std::vector<U> values(e.tensor.data().begin(), e.tensor.data().end());
      out.add(name, ad::Tensor<U>(e.tensor.shape(), std::move(values)), e.trainable);
    }
    return out;
  }

  ad::NamedTensors<T> named() const {
    ad::NamedTensors<T> out;
    for (const auto& [name, e] : entries_) out.emplace_back(name, e.tensor);
    return out;
  }

  /// Name -> shape map equality; the precondition for weight-space surgery.
  bool same_layout(const ParamSet& other) const {
    if (entries_.size() != other.entries_.size()) return false;
    auto it = other.entries_.begin();
    for (const auto& [name, e] : entries_) {
      if (name != it->first || e.tensor.shape() != it->second.tensor.shape()) return false;
      ++it;
    }
    return true;
  }

 private:
  Entry& find(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::out_of_range("unknown parameter " + name);
    return it->second;
  }
  const Entry& find(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::out_of_range("unknown parameter " + name);
    return it->second;
  }

  std::map<std::string, Entry> entries_;
};

/// Turns off gradient tracking for every tensor of a ParamSet for the scope's
/// lifetime, then restores each tensor to its trainable flag.
template <typename T>
class FrozenScope {
 public:
  explicit FrozenScope(ParamSet<T>& params) : params_(params) {
    for (const auto& name : params_.names()) params_.at(name).set_requires_grad(false);
  }
  ~FrozenScope() {
    for (const auto& [name, e] : params_.entries()) {
      auto t = e.tensor;
      t.set_requires_grad(e.trainable);
    }
  }
  FrozenScope(const FrozenScope&) = delete;
  FrozenScope& operator=(const FrozenScope&) = delete;

 private:
  ParamSet<T>& params_;
};

}  // namespace cips3d
