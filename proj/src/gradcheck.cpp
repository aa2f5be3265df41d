#include "dsrcnn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "dsrcnn/training.hpp"

namespace dsrcnn {

void GradCheckReport::merge(const GradCheckReport& other) {
  checked += other.checked;
  failures += other.failures;
  if (other.max_rel_error > max_rel_error || worst.empty()) {
    max_rel_error = std::max(max_rel_error, other.max_rel_error);
    if (!other.worst.empty()) worst = other.worst;
  }
}

double relative_error(double analytic, double numeric) {
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  if (scale == 0.0) return 0.0;
  return std::abs(analytic - numeric) / scale;
}

namespace {

void record(GradCheckReport& r, double analytic, double numeric, double tolerance, const std::string& label,
            std::size_t index) {
  const double err = relative_error(analytic, numeric);
  ++r.checked;
  if (!(err < tolerance)) ++r.failures;
  if (err > r.max_rel_error || r.worst.empty()) {
    r.max_rel_error = std::max(r.max_rel_error, err);
    std::ostringstream os;
    os.precision(10);
    os << label << '[' << index << "]: analytic " << analytic << " vs numeric " << numeric;
    r.worst = os.str();
  }
}

// Per-pixel addends of the six balanced cross-entropy terms.
void append_terms(std::vector<double>& out, const SaliencyMap& pred, const GroundTruthMask& gt) {
  const double alpha = class_balance_alpha(gt);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const double p = std::clamp(pred.values[i], kProbFloor, 1.0 - kProbFloor);
    out.push_back(gt.values[i] ? -alpha * std::log(p) : -(1.0 - alpha) * std::log(1.0 - p));
  }
}

std::vector<double> loss_terms(const ForwardResult& fr, const GroundTruthMask& gt) {
  std::vector<double> terms;
  terms.reserve((kNumBlocks + 1) * gt.size());
  for (const SaliencyMap& m : fr.side_maps) append_terms(terms, m, gt);
  append_terms(terms, fr.fused_map, gt);
  return terms;
}

}  // namespace

GradCheckReport check_gradient(std::span<double> values, std::span<const double> analytic,
                               const std::function<double()>& loss, double step, double tolerance,
                               const std::string& label) {
  GradCheckReport r;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double saved = values[i];
    values[i] = saved + step;
    const double up = loss();
    values[i] = saved - step;
    const double down = loss();
    values[i] = saved;
    record(r, analytic[i], (up - down) / (2.0 * step), tolerance, label, i);
  }
  return r;
}

GradCheckReport check_gradient_terms(std::span<double> values, std::span<const double> analytic,
                                     const std::function<std::vector<double>()>& terms, double step,
                                     double tolerance, const std::string& label) {
  GradCheckReport r;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double saved = values[i];
    values[i] = saved + step;
    const std::vector<double> up = terms();
    values[i] = saved - step;
    const std::vector<double> down = terms();
    values[i] = saved;
    if (up.size() != down.size()) throw std::logic_error("gradcheck: term count changed under perturbation");
    long double diff = 0.0L;
    for (std::size_t k = 0; k < up.size(); ++k) diff += up[k] - down[k];
    record(r, analytic[i], static_cast<double>(diff) / (2.0 * step), tolerance, label, i);
  }
  return r;
}

GradCheckReport check_graph_gradients(std::vector<Tensor> leaves, const GraphLoss& fn, double step,
                                      double tolerance, const std::string& label) {
  auto evaluate = [&](bool with_backward, std::vector<Tensor>* grads) {
    Graph g;
    std::vector<Var> vars;
    vars.reserve(leaves.size());
    for (std::size_t i = 0; i < leaves.size(); ++i) vars.push_back(g.parameter(label + std::to_string(i), leaves[i]));
    const Var loss = fn(g, vars);
    if (with_backward) {
      g.backward(loss);
      for (Var v : vars) grads->push_back(g.grad(v));
    }
    return g.value(loss)[0];
  };
  std::vector<Tensor> analytic;
  evaluate(true, &analytic);
  GradCheckReport report;
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    report.merge(check_gradient(leaves[i].data(), analytic[i].data(), [&] { return evaluate(false, nullptr); },
                                step, tolerance, label + "#" + std::to_string(i)));
  }
  return report;
}

GradCheckReport check_model_gradients(const Model& model, const Tensor& image, const GroundTruthMask& gt,
                                      Mode mode, std::uint64_t seed, double step, double tolerance) {
  Rng rng(seed);
  const GradientResult analytic = compute_gradients(model, image, gt, mode, rng);

  Model probe = model;
  auto terms = [&] {
    Rng local(seed);
    return loss_terms(forward(probe, image, mode, local), gt);
  };
  GradCheckReport report;
  auto params = parameters(probe);
  for (std::size_t i = 0; i < params.size(); ++i) {
    report.merge(check_gradient_terms(params[i].tensor->data(), analytic.gradients[i].data(), terms, step,
                                      tolerance, params[i].name));
  }
  return report;
}

}  // namespace dsrcnn
