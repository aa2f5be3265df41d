#include "dsrcnn/graph.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace dsrcnn {

const char* to_string(OpKind kind) {
  switch (kind) {
    case OpKind::kInput: return "input";
    case OpKind::kParameter: return "parameter";
    case OpKind::kConv2d: return "conv2d";
    case OpKind::kTransposedConv2d: return "transposed_conv2d";
    case OpKind::kMaxPool2d: return "max_pool2d";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kRelu: return "relu";
    case OpKind::kDropout: return "dropout";
    case OpKind::kConcatChannels: return "concat_channels";
    case OpKind::kSliceChannels: return "slice_channels";
    case OpKind::kAdd: return "add";
    case OpKind::kSum: return "sum";
    case OpKind::kBalancedBce: return "balanced_bce";
  }
  return "unknown";
}

const Tensor& BackwardContext::input(std::size_t i) const {
  return graph_.nodes_[graph_.nodes_[node_].inputs.at(i).id].value;
}

const Tensor& BackwardContext::output() const { return graph_.nodes_[node_].value; }

std::span<const double> BackwardContext::output_grad() const {
  return std::as_const(graph_.nodes_[node_].value).grad();
}

std::span<double> BackwardContext::input_grad(std::size_t i) {
  return graph_.nodes_[graph_.nodes_[node_].inputs.at(i).id].value.grad();
}

Var Graph::input(Tensor value, std::string name) {
  nodes_.push_back(Node{OpKind::kInput, std::move(name), {}, std::move(value), nullptr});
  return Var{nodes_.size() - 1};
}

Var Graph::parameter(std::string name, Tensor value) {
  nodes_.push_back(Node{OpKind::kParameter, std::move(name), {}, std::move(value), nullptr});
  return Var{nodes_.size() - 1};
}

Var Graph::record(OpKind kind, std::vector<Var> inputs, Tensor value, BackwardFn backward) {
  for (Var in : inputs) {
    if (in.id >= nodes_.size()) {
      throw std::logic_error(std::string("graph: ") + to_string(kind) + " node references node " +
                             std::to_string(in.id) + " which does not precede it");
    }
  }
  value.drop_grad();
  nodes_.push_back(Node{kind, {}, std::move(inputs), std::move(value), std::move(backward)});
  return Var{nodes_.size() - 1};
}

const Graph::Node& Graph::node(Var v) const {
  if (v.id >= nodes_.size()) throw std::out_of_range("graph: unknown node " + std::to_string(v.id));
  return nodes_[v.id];
}

Graph::Node& Graph::node(Var v) {
  if (v.id >= nodes_.size()) throw std::out_of_range("graph: unknown node " + std::to_string(v.id));
  return nodes_[v.id];
}

Tensor Graph::grad(Var v) const {
  const Tensor& value = node(v).value;
  if (!value.has_grad()) return Tensor(value.shape());
  const auto g = value.grad();
  return Tensor(value.shape(), std::vector<double>(g.begin(), g.end()));
}

void Graph::backward(Var loss) {
  Node& root = node(loss);
  if (root.value.shape() != Shape{1, 1, 1, 1}) {
    throw ShapeError("backward: loss must be scalar (1, 1, 1, 1), got " + root.value.shape().str());
  }
  for (Node& n : nodes_) n.value.drop_grad();

  std::vector<char> live(nodes_.size(), 0);
  live[loss.id] = 1;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    if (!live[i]) continue;
    for (Var in : nodes_[i].inputs) live[in.id] = 1;
  }

  root.value.grad()[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    if (!live[i]) continue;
    Node& n = nodes_[i];
    if (!n.backward) continue;
    for (Var in : n.inputs) nodes_[in.id].value.grad();
    BackwardContext ctx(*this, i);
    n.backward(ctx);
  }
}

std::size_t Graph::conv_depth(Var v) const {
  node(v);
  std::vector<std::size_t> depth(v.id + 1, 0);
  for (std::size_t i = 0; i <= v.id; ++i) {
    std::size_t best = 0;
    for (Var in : nodes_[i].inputs) best = std::max(best, depth[in.id]);
    depth[i] = best + (nodes_[i].kind == OpKind::kConv2d ? 1 : 0);
  }
  return depth[v.id];
}

}  // namespace dsrcnn
