#pragma once

#include <filesystem>
#include <ostream>
#include <span>
#include <string>

#include "dsrcnn/metrics.hpp"
#include "dsrcnn/training.hpp"

namespace dsrcnn {

/// Shortest decimal text that reads back as the same double.
std::string format_real(double v);

/// Per-image rows, then a "MEAN" summary row. Skipped weighted F is "skipped".
void write_metrics_csv(std::ostream& os, const MetricsReport& report);
void write_pr_curve_csv(std::ostream& os, const MetricsReport& report);
void write_metrics_json(std::ostream& os, const MetricsReport& report);
void write_pr_curve_svg(std::ostream& os, const MetricsReport& report);

/// iteration, side1..side5, fuse, total.
void write_loss_csv(std::ostream& os, std::span<const LossBreakdown> history);

}  // namespace dsrcnn
