#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "mmfp/core/error.hpp"
#include "mmfp/core/tensor.hpp"

namespace mmfp {

// Define-by-run tape. Each forward op appends at most one node; backward
// replays the nodes in reverse append order exactly once, after which the
// graph is consumed and must be reset (or discarded) before reuse.
//
// A graph is single-threaded: one rollout/backward at a time.
template <class T>
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool grad_enabled() const { return grad_enabled_; }
  void set_grad_enabled(bool on) { grad_enabled_ = on; }

  std::size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }
  const void* id() const { return this; }

  void record(std::function<void()> backward_fn) {
    nodes_.push_back(std::move(backward_fn));
  }

  // Marks `out` as produced on this tape and returns whether the op must
  // record a backward node for it.
  bool track(Tensor<T>& out, bool any_input_requires_grad) {
    out.set_tape(this);
    const bool rec = grad_enabled_ && any_input_requires_grad;
    out.set_requires_grad(rec);
    return rec;
  }

  void backward(Tensor<T> loss) {
    if (!loss.defined() || loss.numel() != 1)
      throw ContractError("backward: loss must be a scalar tensor");
    if (loss.tape() != id())
      throw ContractError("backward: loss is not a product of this graph");
    if (consumed_)
      throw StateError("backward: graph already consumed; reset() before reuse");
    consumed_ = true;
    loss.ensure_grad();
    loss.grad()[0] = T(1);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
  }

  void reset() {
    nodes_.clear();
    consumed_ = false;
  }

 private:
  std::vector<std::function<void()>> nodes_;
  bool grad_enabled_ = true;
  bool consumed_ = false;
};

}  // namespace mmfp
