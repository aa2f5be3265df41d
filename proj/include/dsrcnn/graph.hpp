#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "dsrcnn/tensor.hpp"

namespace dsrcnn {

enum class OpKind {
  kInput,
  kParameter,
  kConv2d,
  kTransposedConv2d,
  kMaxPool2d,
  kSigmoid,
  kRelu,
  kDropout,
  kConcatChannels,
  kSliceChannels,
  kAdd,
  kSum,
  kBalancedBce,
};

const char* to_string(OpKind kind);

/// Handle to a node of a Graph. Only meaningful for the graph that issued it.
struct Var {
  std::size_t id = 0;
};

class Graph;

/// View handed to a node's backward function.
class BackwardContext {
 public:
  BackwardContext(Graph& graph, std::size_t node) : graph_(graph), node_(node) {}

  const Tensor& input(std::size_t i) const;
  const Tensor& output() const;
  std::span<const double> output_grad() const;
  /// Gradient buffer of input i; backward functions accumulate into it.
  std::span<double> input_grad(std::size_t i);

 private:
  Graph& graph_;
  std::size_t node_;
};

using BackwardFn = std::function<void(BackwardContext&)>;

/// Tape of operations in creation order, which is also a topological order.
///
/// Inputs must already exist when a node is recorded, so a cycle cannot be
/// expressed. backward() walks the tape in reverse and visits only nodes that
/// transitively feed the loss, each exactly once.
class Graph {
 public:
  Var input(Tensor value, std::string name = {});
  Var parameter(std::string name, Tensor value);

  /// Appends a node. Throws std::logic_error if any input does not precede it.
  Var record(OpKind kind, std::vector<Var> inputs, Tensor value, BackwardFn backward);

  const Tensor& value(Var v) const { return node(v).value; }
  /// Gradient of the last backward() loss w.r.t. v; zeros if v did not feed it.
  Tensor grad(Var v) const;
  OpKind kind(Var v) const { return node(v).kind; }
  const std::string& name(Var v) const { return node(v).name; }
  const std::vector<Var>& inputs(Var v) const { return node(v).inputs; }
  std::size_t size() const { return nodes_.size(); }

  /// Requires a (1,1,1,1) loss. Clears gradients left by earlier calls.
  void backward(Var loss);

  /// Number of Conv2d nodes on the longest path ending at v.
  std::size_t conv_depth(Var v) const;

 private:
  friend class BackwardContext;

  struct Node {
    OpKind kind;
    std::string name;
    std::vector<Var> inputs;
    Tensor value;
    BackwardFn backward;
  };

  const Node& node(Var v) const;
  Node& node(Var v);

  std::vector<Node> nodes_;
};

}  // namespace dsrcnn
