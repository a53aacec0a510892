#include "hlsa/report.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <utility>

namespace hlsa {

namespace {

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 50;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

using Series = std::vector<std::pair<double, double>>;

std::string render(const std::string& title, const std::string& y_label,
                   const std::map<std::pair<std::size_t, std::size_t>, Series>& series) {
  double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
  bool first = true;
  for (const auto& [key, pts] : series) {
    for (auto [x, y] : pts) {
      if (first) {
        x_min = x_max = x;
        y_min = y_max = y;
        first = false;
      }
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  }
  y_min = std::min(y_min, 0.0);
  if (x_max == x_min) x_max = x_min + 1;
  if (y_max == y_min) y_max = y_min + 1;
  const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
  auto sx = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * plot_w; };
  auto sy = [&](double y) { return kTop + plot_h - (y - y_min) / (y_max - y_min) * plot_h; };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + px(kWidth) +
       "\" height=\"" + px(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + px(kWidth / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" +
       title + "</text>\n";
  s += "<line x1=\"" + px(kLeft) + "\" y1=\"" + px(kTop + plot_h) + "\" x2=\"" +
       px(kLeft + plot_w) + "\" y2=\"" + px(kTop + plot_h) + "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + px(kLeft) + "\" y1=\"" + px(kTop) + "\" x2=\"" + px(kLeft) +
       "\" y2=\"" + px(kTop + plot_h) + "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x_min + (x_max - x_min) * k / 4.0;
    const double yv = y_min + (y_max - y_min) * k / 4.0;
    s += "<text x=\"" + px(sx(xv)) + "\" y=\"" + px(kTop + plot_h + 18) +
         "\" text-anchor=\"middle\">" + fmt(xv) + "</text>\n";
    s += "<text x=\"" + px(kLeft - 8) + "\" y=\"" + px(sy(yv) + 4) +
         "\" text-anchor=\"end\">" + fmt(yv) + "</text>\n";
  }
  s += "<text x=\"" + px(kLeft + plot_w / 2) + "\" y=\"" + px(kHeight - 10) +
       "\" text-anchor=\"middle\">baseline queries N</text>\n";
  s += "<text x=\"16\" y=\"" + px(kTop + plot_h / 2) +
       "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " + px(kTop + plot_h / 2) +
       ")\">" + y_label + "</text>\n";

  std::size_t color = 0;
  double legend_y = kTop + 10;
  for (const auto& [key, pts] : series) {
    const char* c = kPalette[color++ % std::size(kPalette)];
    std::string points;
    for (auto [x, y] : pts) {
      if (!points.empty()) points += " ";
      points += px(sx(x)) + "," + px(sy(y));
    }
    s += "<polyline fill=\"none\" stroke=\"" + std::string(c) +
         "\" stroke-width=\"2\" points=\"" + points + "\"/>\n";
    for (auto [x, y] : pts) {
      s += "<circle cx=\"" + px(sx(x)) + "\" cy=\"" + px(sy(y)) + "\" r=\"3\" fill=\"" + c +
           "\"/>\n";
    }
    const double lx = kLeft + plot_w + 12;
    s += "<line x1=\"" + px(lx) + "\" y1=\"" + px(legend_y) + "\" x2=\"" + px(lx + 18) +
         "\" y2=\"" + px(legend_y) + "\" stroke=\"" + c + "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + px(lx + 24) + "\" y=\"" + px(legend_y + 4) + "\">Q=" +
         std::to_string(key.first) + " p=" + std::to_string(key.second) + "</text>\n";
    legend_y += 18;
  }
  s += "</svg>\n";
  return s;
}

}  // namespace

std::vector<Chart> render_charts(std::span<const SummaryRow> rows) {
  using Getter = std::function<std::optional<double>(const SummaryRow&)>;
  const std::vector<std::tuple<std::string, std::string, std::string, Getter>> metrics = {
      {"median_l2", "Median L2 vs baseline queries", "median L2",
       [](const SummaryRow& r) { return r.median_l2; }},
      {"mean_pp", "Unattacked dimensions vs baseline queries", "mean PP (%)",
       [](const SummaryRow& r) { return r.mean_pp; }},
      {"sr", "Success rate vs baseline queries", "SR (%)",
       [](const SummaryRow& r) { return r.sr; }},
  };
  std::vector<Chart> charts;
  for (const auto& [name, title, y_label, get] : metrics) {
    std::map<std::pair<std::size_t, std::size_t>, Series> series;
    for (const auto& r : rows) {
      if (auto v = get(r)) {
        series[{r.budget, r.p}].emplace_back(static_cast<double>(r.baseline), *v);
      }
    }
    for (auto& [key, pts] : series) std::sort(pts.begin(), pts.end());
    charts.push_back(Chart{name, render(title, y_label, series)});
  }
  return charts;
}

}  // namespace hlsa
