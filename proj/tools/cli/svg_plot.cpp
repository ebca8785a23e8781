#include "svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "nplab/errors.hpp"

namespace nplab::cli {
namespace {

constexpr double kWidth = 720.0, kHeight = 420.0, kMargin = 48.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return kMargin + (x - x0) / (x1 - x0) * (kWidth - 2 * kMargin); }
  double py(double y) const { return kHeight - kMargin - (y - y0) / (y1 - y0) * (kHeight - 2 * kMargin); }
};

std::string polyline(const Frame& f, const std::vector<std::pair<double, double>>& pts) {
  std::string s;
  for (const auto& [x, y] : pts) s += num(f.px(x)) + "," + num(f.py(y)) + " ";
  if (!s.empty()) s.pop_back();
  return s;
}

}  // namespace

BandPlot make_band_plot(const metrics::Predictor& predict, const taskgen::Task& task, int points, double lo,
                        double hi, Rng& rng) {
  if (task.x_dim() != 1 || task.y_dim() != 1) throw ContractError("plot: only 1D tasks can be drawn");
  if (points < 2 || !(hi > lo)) throw ConfigError("plot: need at least 2 grid points and hi > lo");
  BandPlot p;
  std::vector<Vector> xs;
  for (int i = 0; i < points; ++i) {
    const double x = lo + (hi - lo) * i / (points - 1);
    p.grid.push_back(x);
    xs.push_back(Vector::Constant(1, x));
  }
  const metrics::PredictiveSet preds = predict(task, xs, rng);
  for (const auto& pt : preds.points) {
    const DiagGaussian g = models::moment_match(pt);
    p.mean.push_back(g.mean(0));
    p.half_width.push_back(3.0 * std::exp(0.5 * g.log_var(0)));
  }
  for (std::size_t i = 0; i < task.target_size(); ++i) p.truth.emplace_back(task.x_target[i](0), task.y_target[i](0));
  std::sort(p.truth.begin(), p.truth.end());
  for (std::size_t i = 0; i < task.context_size(); ++i)
    p.context.emplace_back(task.x_context[i](0), task.y_context[i](0));
  return p;
}

std::string render_svg(const BandPlot& p) {
  double y0 = 0.0, y1 = 0.0;
  bool first = true;
  const auto extend = [&](double v) {
    if (!std::isfinite(v)) return;
    y0 = first ? v : std::min(y0, v);
    y1 = first ? v : std::max(y1, v);
    first = false;
  };
  for (std::size_t i = 0; i < p.grid.size(); ++i) {
    extend(p.mean[i] - p.half_width[i]);
    extend(p.mean[i] + p.half_width[i]);
  }
  for (const auto& [x, y] : p.truth) extend(y);
  if (y1 - y0 < 1e-9) {
    y0 -= 1.0;
    y1 += 1.0;
  }
  const double pad = 0.05 * (y1 - y0);
  const Frame f{p.grid.front(), p.grid.back(), y0 - pad, y1 + pad};

  std::vector<std::pair<double, double>> upper, lower, mean;
  for (std::size_t i = 0; i < p.grid.size(); ++i) {
    upper.emplace_back(p.grid[i], p.mean[i] + p.half_width[i]);
    lower.emplace_back(p.grid[i], p.mean[i] - p.half_width[i]);
    mean.emplace_back(p.grid[i], p.mean[i]);
  }
  std::reverse(lower.begin(), lower.end());
  std::vector<std::pair<double, double>> band = upper;
  band.insert(band.end(), lower.begin(), lower.end());
  std::vector<std::pair<double, double>> truth;
  for (const auto& pt : p.truth)
    if (pt.first >= f.x0 && pt.first <= f.x1) truth.push_back(pt);

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth) << "\" height=\"" << num(kHeight)
     << "\" viewBox=\"0 0 " << num(kWidth) << " " << num(kHeight) << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  // Training input range, for reference against the out-of-range grid.
  if (f.x0 < -2.0 && f.x1 > 2.0) {
    os << "<rect x=\"" << num(f.px(-2.0)) << "\" y=\"" << num(kMargin) << "\" width=\"" << num(f.px(2.0) - f.px(-2.0))
       << "\" height=\"" << num(kHeight - 2 * kMargin) << "\" fill=\"#f2f2f2\"/>\n";
  }
  os << "<polygon class=\"band\" points=\"" << polyline(f, band) << "\" fill=\"#9ecae1\" fill-opacity=\"0.6\"/>\n";
  if (truth.size() > 1)
    os << "<polyline class=\"truth\" points=\"" << polyline(f, truth)
       << "\" fill=\"none\" stroke=\"#333\" stroke-dasharray=\"4 3\"/>\n";
  os << "<polyline class=\"mean\" points=\"" << polyline(f, mean) << "\" fill=\"none\" stroke=\"#08519c\" stroke-width=\"2\"/>\n";
  for (const auto& [x, y] : p.context)
    os << "<circle class=\"context\" cx=\"" << num(f.px(x)) << "\" cy=\"" << num(f.py(y)) << "\" r=\"3.5\" fill=\"#cb181d\"/>\n";
  os << "<rect x=\"" << num(kMargin) << "\" y=\"" << num(kMargin) << "\" width=\"" << num(kWidth - 2 * kMargin)
     << "\" height=\"" << num(kHeight - 2 * kMargin) << "\" fill=\"none\" stroke=\"#444\"/>\n";
  const auto label = [&](double x, double y, const std::string& anchor, const std::string& text) {
    os << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\""
       << anchor << "\">" << text << "</text>\n";
  };
  label(kMargin, kHeight - kMargin + 16, "middle", num(f.x0));
  label(kWidth - kMargin, kHeight - kMargin + 16, "middle", num(f.x1));
  label(kMargin - 6, kHeight - kMargin, "end", num(f.y0));
  label(kMargin - 6, kMargin + 4, "end", num(f.y1));
  if (!p.title.empty()) label(kWidth / 2, kMargin - 16, "middle", p.title);
  os << "</svg>\n";
  return os.str();
}

}  // namespace nplab::cli
