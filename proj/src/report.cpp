#include "dsrcnn/report.hpp"

#include <charconv>
#include <cstdio>
#include <json.hpp>

namespace dsrcnn {

std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

nlohmann::json optional_real(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

void write_metrics_csv(std::ostream& os, const MetricsReport& r) {
  os << "image,mean_f,adaptive_threshold,adaptive_precision,adaptive_recall,adaptive_f,mae,weighted_f\n";
  for (const ImageMetrics& m : r.images) {
    os << csv_field(m.name) << ',' << format_real(m.mean_f) << ',' << format_real(m.adaptive_threshold)
       << ',' << format_real(m.adaptive_precision) << ',' << format_real(m.adaptive_recall) << ','
       << format_real(m.adaptive_f) << ',' << format_real(m.mae) << ','
       << (m.weighted_f ? format_real(*m.weighted_f) : std::string("skipped")) << '\n';
  }
  os << "MEAN," << format_real(r.mean_f) << ",," << format_real(r.adaptive_precision) << ','
     << format_real(r.adaptive_recall) << ',' << format_real(r.adaptive_f) << ',' << format_real(r.mae)
     << ',' << (r.weighted_f ? format_real(*r.weighted_f) : std::string("skipped")) << '\n';
}

void write_pr_curve_csv(std::ostream& os, const MetricsReport& r) {
  os << "threshold,precision,recall\n";
  for (const PrPoint& p : r.curve) {
    os << format_real(p.threshold) << ',' << format_real(p.precision) << ',' << format_real(p.recall) << '\n';
  }
}

void write_metrics_json(std::ostream& os, const MetricsReport& r) {
  nlohmann::ordered_json doc;
  doc["options"] = {{"beta_sq", r.options.beta_sq},
                    {"weighted_beta_sq", r.options.weighted_beta_sq},
                    {"thresholds", r.options.thresholds}};
  doc["summary"] = {{"images", r.images.size()},
                    {"mean_f", r.mean_f},
                    {"adaptive_precision", r.adaptive_precision},
                    {"adaptive_recall", r.adaptive_recall},
                    {"adaptive_f", r.adaptive_f},
                    {"mae", r.mae},
                    {"weighted_f", optional_real(r.weighted_f)},
                    {"weighted_f_images", r.weighted_f_count}};
  auto& images = doc["images"] = nlohmann::ordered_json::array();
  for (const ImageMetrics& m : r.images) {
    images.push_back({{"name", m.name},
                      {"mean_f", m.mean_f},
                      {"adaptive_threshold", m.adaptive_threshold},
                      {"adaptive_precision", m.adaptive_precision},
                      {"adaptive_recall", m.adaptive_recall},
                      {"adaptive_f", m.adaptive_f},
                      {"mae", m.mae},
                      {"weighted_f", optional_real(m.weighted_f)}});
  }
  auto& rejected = doc["rejected"] = nlohmann::ordered_json::array();
  for (const RejectedPair& p : r.rejected) rejected.push_back({{"name", p.name}, {"reason", p.reason}});
  auto& curve = doc["pr_curve"] = nlohmann::ordered_json::array();
  for (const PrPoint& p : r.curve) curve.push_back({p.threshold, p.precision, p.recall});
  os << doc.dump(2) << '\n';
}

void write_pr_curve_svg(std::ostream& os, const MetricsReport& r) {
  constexpr double kSize = 400.0;
  constexpr double kMargin = 50.0;
  const double total = kSize + 2 * kMargin;
  auto px = [&](double recall) { return fixed(kMargin + recall * kSize, 2); };
  auto py = [&](double precision) { return fixed(kMargin + (1.0 - precision) * kSize, 2); };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << total << "\" height=\"" << total
     << "\" viewBox=\"0 0 " << total << ' ' << total << "\">\n";
  os << "  <rect x=\"0\" y=\"0\" width=\"" << total << "\" height=\"" << total << "\" fill=\"white\"/>\n";
  for (int i = 0; i <= 10; ++i) {
    const double t = i / 10.0;
    os << "  <line x1=\"" << px(t) << "\" y1=\"" << py(0) << "\" x2=\"" << px(t) << "\" y2=\"" << py(1)
       << "\" stroke=\"#e0e0e0\"/>\n";
    os << "  <line x1=\"" << px(0) << "\" y1=\"" << py(t) << "\" x2=\"" << px(1) << "\" y2=\"" << py(t)
       << "\" stroke=\"#e0e0e0\"/>\n";
    os << "  <text x=\"" << px(t) << "\" y=\"" << fixed(kMargin + kSize + 18, 2)
       << "\" font-size=\"11\" text-anchor=\"middle\">" << fixed(t, 1) << "</text>\n";
    os << "  <text x=\"" << fixed(kMargin - 8, 2) << "\" y=\"" << py(t)
       << "\" font-size=\"11\" text-anchor=\"end\" dominant-baseline=\"middle\">" << fixed(t, 1) << "</text>\n";
  }
  os << "  <rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kSize << "\" height=\"" << kSize
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "  <text x=\"" << fixed(kMargin + kSize / 2, 2) << "\" y=\"" << fixed(total - 10, 2)
     << "\" font-size=\"13\" text-anchor=\"middle\">Recall</text>\n";
  os << "  <text x=\"14\" y=\"" << fixed(kMargin + kSize / 2, 2)
     << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 14 " << fixed(kMargin + kSize / 2, 2)
     << ")\">Precision</text>\n";
  os << "  <polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < r.curve.size(); ++i) {
    if (i) os << ' ';
    os << px(r.curve[i].recall) << ',' << py(r.curve[i].precision);
  }
  os << "\"/>\n";
  os << "  <text x=\"" << fixed(kMargin + 8, 2) << "\" y=\"" << fixed(kMargin + 18, 2)
     << "\" font-size=\"12\">mean F=" << fixed(r.mean_f, 4) << "  adaptive F=" << fixed(r.adaptive_f, 4)
     << "  MAE=" << fixed(r.mae, 4) << "</text>\n";
  os << "</svg>\n";
}

void write_loss_csv(std::ostream& os, std::span<const LossBreakdown> history) {
  os << "iteration,side1,side2,side3,side4,side5,fuse,total\n";
  for (std::size_t i = 0; i < history.size(); ++i) {
    os << i;
    for (double v : history[i].side_losses) os << ',' << format_real(v);
    os << ',' << format_real(history[i].fuse_loss) << ',' << format_real(history[i].total) << '\n';
  }
}

}  // namespace dsrcnn
