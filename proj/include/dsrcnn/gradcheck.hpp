#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dsrcnn/graph.hpp"
#include "dsrcnn/maps.hpp"
#include "dsrcnn/model.hpp"

namespace dsrcnn {

struct GradCheckReport {
  std::size_t checked = 0;
  std::size_t failures = 0;
  double max_rel_error = 0.0;
  std::string worst;  // "<label>[index]: analytic vs numeric"

  void merge(const GradCheckReport& other);
  bool ok() const { return failures == 0; }
};

/// |a - n| / max(|a|, |n|); zero when both vanish.
double relative_error(double analytic, double numeric);

/// Central differences (loss(v + h) - loss(v - h)) / 2h for each entry of
/// `values`, which is perturbed in place and restored.
GradCheckReport check_gradient(std::span<double> values, std::span<const double> analytic,
                               const std::function<double()>& loss, double step, double tolerance,
                               const std::string& label);

/// Like check_gradient, but `terms` returns the loss as a list of addends.
/// The difference is taken term by term before summing, so the estimate is
/// not limited by the rounding unit of a large total.
GradCheckReport check_gradient_terms(std::span<double> values, std::span<const double> analytic,
                                     const std::function<std::vector<double>()>& terms, double step,
                                     double tolerance, const std::string& label);

/// Builds a scalar from graph leaves holding `leaves`.
using GraphLoss = std::function<Var(Graph&, std::span<const Var>)>;

/// Backpropagates `fn` once for the analytic gradients, then checks every
/// entry of every leaf against central differences of the recomputed loss.
/// `fn` must be deterministic (reseed any Rng inside it).
GradCheckReport check_graph_gradients(std::vector<Tensor> leaves, const GraphLoss& fn, double step,
                                      double tolerance, const std::string& label);

/// Checks every parameter of `model` against central differences of the
/// joint objective. Each loss evaluation reseeds dropout with `seed`, so
/// train-mode checks see one fixed mask.
GradCheckReport check_model_gradients(const Model& model, const Tensor& image, const GroundTruthMask& gt,
                                      Mode mode, std::uint64_t seed, double step, double tolerance);

}  // namespace dsrcnn
