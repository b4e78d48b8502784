#pragma once

#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ocean/tensor.hpp"

namespace ocean {

/// One learnable parameter: value, accumulated gradient and Adam moments.
template <class T>
struct ParamBlock {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  Tensor<T> m;  // first moment
  Tensor<T> v;  // second moment

  ParamBlock() = default;
  ParamBlock(std::string n, Tensor<T> init)
      : name(std::move(n)),
        value(std::move(init)),
        grad(value.shape),
        m(value.shape),
        v(value.shape) {}

  void zero_grad() { grad.fill(T(0)); }
  int64_t numel() const { return value.numel(); }
};

/// Handle to a node on a Tape.
struct Var {
  int32_t i = -1;
  bool valid() const { return i >= 0; }
};

/// Gradients routed away from the blocks themselves (used by data-parallel
/// workers, which reduce into the shared blocks at one sync point per batch).
template <class T>
using GradSink = std::unordered_map<const ParamBlock<T>*, Tensor<T>>;

/// Record of executed differentiable operations. Backward replays the records
/// in strict reverse execution order. A tape is single-threaded and must be
/// cleared (or destroyed) after each optimisation step.
template <class T>
class Tape {
 public:
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const { return grad_enabled_; }

  /// Trainable parameter leaf. Repeated calls with the same block reuse one node.
  Var leaf(ParamBlock<T>& p) {
    auto it = leaf_cache_.find(&p);
    if (it != leaf_cache_.end()) return it->second;
    Var v = make_node(p.value, grad_enabled_);
    nodes_[static_cast<size_t>(v.i)].param = &p;
    leaf_cache_.emplace(&p, v);
    return v;
  }

  /// Parameter used as a constant: no gradient flows into it.
  Var frozen(const ParamBlock<T>& p) { return constant(p.value); }

  /// Constant input (no gradient tracking).
  Var constant(Tensor<T> v) { return make_node(std::move(v), false); }

  /// Differentiable non-parameter input; its gradient is readable after backward.
  Var input(Tensor<T> v) { return make_node(std::move(v), grad_enabled_); }

  const Tensor<T>& val(Var v) const { return nodes_[static_cast<size_t>(v.i)].value; }
  bool tracked(Var v) const { return nodes_[static_cast<size_t>(v.i)].tracked; }

  Tensor<T>& grad(Var v) {
    Node& n = nodes_[static_cast<size_t>(v.i)];
    if (!n.tracked) throw std::logic_error("tape: gradient requested for untracked node");
    return n.grad;
  }

  Var make_node(Tensor<T> value, bool tracked) {
    Node n;
    n.value = std::move(value);
    n.tracked = tracked && grad_enabled_;
    if (n.tracked) n.grad = Tensor<T>(n.value.shape);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int32_t>(nodes_.size() - 1)};
  }

  void record(std::function<void()> back) {
    if (grad_enabled_) records_.push_back(std::move(back));
  }

  /// Accumulate d(loss)/d(param) * scale into every reachable ParamBlock's grad
  /// (or into `sink` when given). Loss must be a tracked scalar node.
  void backward(Var loss, T scale = T(1), GradSink<T>* sink = nullptr) {
    if (backward_done_)
      throw std::logic_error("tape: backward called twice without clearing");
    if (!grad_enabled_) throw std::logic_error("tape: backward on a no-grad tape");
    if (!loss.valid() || !tracked(loss))
      throw std::invalid_argument("tape: loss is not a tracked node");
    if (val(loss).numel() != 1)
      throw std::invalid_argument("tape: loss must be scalar, got shape " +
                                  shape_str(val(loss).shape));
    grad(loss).fill(scale);
    for (auto it = records_.rbegin(); it != records_.rend(); ++it) (*it)();
    for (auto& [block, var] : leaf_cache_) {
      const Tensor<T>& g = nodes_[static_cast<size_t>(var.i)].grad;
      Tensor<T>& dst = sink ? (*sink)[block] : const_cast<ParamBlock<T>*>(block)->grad;
      if (dst.numel() == 0) dst = Tensor<T>(g.shape);
      for (int64_t i = 0; i < g.numel(); ++i) dst[i] += g[i];
    }
    backward_done_ = true;
  }

  void clear() {
    nodes_.clear();
    records_.clear();
    leaf_cache_.clear();
    backward_done_ = false;
  }

  size_t num_nodes() const { return nodes_.size(); }
  size_t num_records() const { return records_.size(); }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    ParamBlock<T>* param = nullptr;
    bool tracked = false;
  };

  std::vector<Node> nodes_;
  std::vector<std::function<void()>> records_;
  std::unordered_map<const ParamBlock<T>*, Var> leaf_cache_;
  bool grad_enabled_ = true;
  bool backward_done_ = false;
};

/// Bias-corrected Adam update; zeroes gradients afterwards. Steps are 1-based.
template <class T>
void adam_step(std::span<ParamBlock<T>* const> blocks, T lr, T beta1 = T(0.9),
               T beta2 = T(0.999), T eps = T(1e-8), int64_t t = 1);

extern template void adam_step<float>(std::span<ParamBlock<float>* const>, float, float,
                                      float, float, int64_t);
extern template void adam_step<double>(std::span<ParamBlock<double>* const>, double, double,
                                       double, double, int64_t);

extern template struct ParamBlock<float>;
extern template struct ParamBlock<double>;
extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace ocean
