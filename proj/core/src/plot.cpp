#include "confope/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

#include "confope/error.hpp"

namespace confope {

namespace {

struct Series {
  std::string label;
  std::string color;
  std::string dash;  // empty for solid
  double width = 1.5;
  bool clip_only = false;  // excluded from the y range
  std::vector<std::pair<double, double>> points;
};

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

/// Interpolates between two RGB colors; t = 0 gives `from`.
std::string ramp(std::array<int, 3> from, std::array<int, 3> to, double t) {
  char buf[16];
  std::array<int, 3> c{};
  for (std::size_t i = 0; i < 3; ++i) {
    c[i] = static_cast<int>(std::lround(from[i] + (to[i] - from[i]) * t));
  }
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", c[0], c[1], c[2]);
  return buf;
}

constexpr std::array<int, 3> kBlueLight{158, 202, 225};
constexpr std::array<int, 3> kBlueDark{8, 48, 107};
constexpr std::array<int, 3> kOrangeLight{253, 174, 107};
constexpr std::array<int, 3> kOrangeDark{127, 39, 4};

double shade(std::size_t rank, std::size_t count) {
  return count <= 1 ? 1.0 : static_cast<double>(rank) / static_cast<double>(count - 1);
}

std::vector<double> sorted_unique(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::size_t rank_of(const std::vector<double>& sorted, double v) {
  return static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), v) -
                                  sorted.begin());
}

void add_point(Series& s, double x, double y) {
  for (const auto& pt : s.points) {
    if (pt.first == x) return;
  }
  s.points.emplace_back(x, y);
}

std::vector<Series> gamma_chart(std::span<const BoundResult> rows, std::string& x_label) {
  x_label = "Gamma";
  std::vector<Series> out;
  std::map<std::pair<int, double>, std::size_t> index;
  std::vector<double> robust_deltas;
  std::vector<double> single_deltas;
  for (const BoundResult& r : rows) {
    if (r.method == Method::Robust) robust_deltas.push_back(r.delta);
    if (r.method == Method::SingleStep) single_deltas.push_back(r.delta);
  }
  robust_deltas = sorted_unique(robust_deltas);
  single_deltas = sorted_unique(single_deltas);
  for (const BoundResult& r : rows) {
    const bool gamma_only = r.method == Method::Fqe || r.method == Method::Naive;
    const std::pair<int, double> key{static_cast<int>(r.method), gamma_only ? 0.0 : r.delta};
    auto it = index.find(key);
    if (it == index.end()) {
      Series s;
      switch (r.method) {
        case Method::Fqe:
          s.label = "confounded FQE";
          s.color = "#000000";
          s.width = 2.0;
          break;
        case Method::Naive:
          s.label = "naive";
          s.color = "#808080";
          s.dash = "6,4";
          s.clip_only = true;
          break;
        case Method::Robust:
          s.label = "robust, Delta=" + format_number(r.delta);
          s.color = ramp(kBlueLight, kBlueDark,
                         shade(rank_of(robust_deltas, r.delta), robust_deltas.size()));
          break;
        case Method::SingleStep:
          s.label = "single-step, Delta=" + format_number(r.delta);
          s.color = ramp(kOrangeLight, kOrangeDark,
                         shade(rank_of(single_deltas, r.delta), single_deltas.size()));
          break;
      }
      it = index.emplace(key, out.size()).first;
      out.push_back(std::move(s));
    }
    add_point(out[it->second], r.gamma, r.bound);
  }
  const double lo = rows.front().gamma;
  double x0 = lo;
  double x1 = lo;
  for (const BoundResult& r : rows) {
    x0 = std::min(x0, r.gamma);
    x1 = std::max(x1, r.gamma);
  }
  Series nominal{"nominal value", "#1b7837", "2,3", 1.2, false,
                 {{x0, rows.front().nominal_value}, {x1, rows.front().nominal_value}}};
  Series behavior{"behavior value", "#b2182b", "2,3", 1.2, false,
                  {{x0, rows.front().behavior_value}, {x1, rows.front().behavior_value}}};
  out.push_back(std::move(nominal));
  out.push_back(std::move(behavior));
  return out;
}

std::vector<Series> horizon_chart(std::span<const BoundResult> rows, std::string& x_label) {
  x_label = "horizon";
  std::vector<Series> out;
  std::map<std::tuple<int, double, double>, std::size_t> index;
  std::vector<double> gammas;
  for (const BoundResult& r : rows) gammas.push_back(r.gamma);
  gammas = sorted_unique(gammas);
  Series nominal{"nominal value", "#000000", "2,3", 1.5, false, {}};
  Series behavior{"behavior value", "#b2182b", "2,3", 1.2, false, {}};
  for (const BoundResult& r : rows) {
    const std::tuple<int, double, double> key{static_cast<int>(r.method), r.gamma, r.delta};
    auto it = index.find(key);
    if (it == index.end()) {
      Series s;
      s.label = to_string(r.method) + ", Gamma=" + format_number(r.gamma) +
                ", Delta=" + format_number(r.delta);
      s.color = ramp(kBlueLight, kBlueDark, shade(rank_of(gammas, r.gamma), gammas.size()));
      it = index.emplace(key, out.size()).first;
      out.push_back(std::move(s));
    }
    const double h = static_cast<double>(r.horizon);
    add_point(out[it->second], h, r.bound);
    add_point(nominal, h, r.nominal_value);
    add_point(behavior, h, r.behavior_value);
  }
  out.push_back(std::move(nominal));
  out.push_back(std::move(behavior));
  return out;
}

}  // namespace

std::string render_svg(std::span<const BoundResult> rows, const PlotOptions& options) {
  if (rows.empty()) throw ValidationError("plot: no rows to draw");
  bool many_horizons = false;
  for (const BoundResult& r : rows) many_horizons |= r.horizon != rows.front().horizon;
  std::string x_label;
  std::vector<Series> series =
      many_horizons ? horizon_chart(rows, x_label) : gamma_chart(rows, x_label);
  for (Series& s : series) std::sort(s.points.begin(), s.points.end());

  double x0 = std::numeric_limits<double>::infinity();
  double x1 = -x0;
  double y0 = x0;
  double y1 = -x0;
  for (const Series& s : series) {
    for (const auto& [x, y] : s.points) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      if (!s.clip_only && std::isfinite(y)) {
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
      }
    }
  }
  if (!std::isfinite(y0)) {
    y0 = -1.0;
    y1 = 1.0;
  }
  if (x1 - x0 <= 0.0) {
    x0 -= 0.5;
    x1 += 0.5;
  }
  if (y1 - y0 <= 0.0) {
    const double pad = std::max(1e-3, 0.1 * std::abs(y0));
    y0 -= pad;
    y1 += pad;
  } else {
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
  }

  const double W = options.width;
  const double H = options.height;
  const double left = 70.0;
  const double right = W - 20.0;
  const double top = 40.0;
  const double bottom = H - 50.0;
  auto sx = [&](double x) { return left + (x - x0) / (x1 - x0) * (right - left); };
  auto sy = [&](double y) { return bottom - (y - y0) / (y1 - y0) * (bottom - top); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << options.width << "\" height=\""
      << options.height << "\" viewBox=\"0 0 " << options.width << ' ' << options.height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  svg << "<defs><clipPath id=\"plot-area\"><rect x=\"" << fmt("%.2f", left) << "\" y=\""
      << fmt("%.2f", top) << "\" width=\"" << fmt("%.2f", right - left) << "\" height=\""
      << fmt("%.2f", bottom - top) << "\"/></clipPath></defs>\n";
  const std::string title = options.title.empty() ? rows.front().env : options.title;
  svg << "<text x=\"" << fmt("%.2f", W / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(title) << "</text>\n";

  // Axes and ticks.
  svg << "<g stroke=\"#444444\" stroke-width=\"1\">\n";
  svg << "<line x1=\"" << fmt("%.2f", left) << "\" y1=\"" << fmt("%.2f", bottom) << "\" x2=\""
      << fmt("%.2f", right) << "\" y2=\"" << fmt("%.2f", bottom) << "\"/>\n";
  svg << "<line x1=\"" << fmt("%.2f", left) << "\" y1=\"" << fmt("%.2f", top) << "\" x2=\""
      << fmt("%.2f", left) << "\" y2=\"" << fmt("%.2f", bottom) << "\"/>\n";
  svg << "</g>\n";
  constexpr int kTicks = 5;
  for (int i = 0; i <= kTicks; ++i) {
    const double fx = x0 + (x1 - x0) * i / kTicks;
    const double fy = y0 + (y1 - y0) * i / kTicks;
    svg << "<text x=\"" << fmt("%.2f", sx(fx)) << "\" y=\"" << fmt("%.2f", bottom + 16)
        << "\" text-anchor=\"middle\">" << fmt("%.4g", fx) << "</text>\n";
    svg << "<text x=\"" << fmt("%.2f", left - 6) << "\" y=\"" << fmt("%.2f", sy(fy) + 4)
        << "\" text-anchor=\"end\">" << fmt("%.4g", fy) << "</text>\n";
    svg << "<line x1=\"" << fmt("%.2f", left) << "\" y1=\"" << fmt("%.2f", sy(fy)) << "\" x2=\""
        << fmt("%.2f", right) << "\" y2=\"" << fmt("%.2f", sy(fy))
        << "\" stroke=\"#e6e6e6\" stroke-width=\"0.5\"/>\n";
  }
  svg << "<text x=\"" << fmt("%.2f", (left + right) / 2) << "\" y=\"" << fmt("%.2f", H - 12)
      << "\" text-anchor=\"middle\">" << x_label << "</text>\n";
  svg << "<text transform=\"translate(16," << fmt("%.2f", (top + bottom) / 2)
      << ") rotate(-90)\" text-anchor=\"middle\">lower bound on the value of pi_e</text>\n";

  // Data.
  svg << "<g clip-path=\"url(#plot-area)\" fill=\"none\">\n";
  for (const Series& s : series) {
    std::string style = "stroke=\"" + s.color + "\" stroke-width=\"" + fmt("%.2f", s.width) + "\"";
    if (!s.dash.empty()) style += " stroke-dasharray=\"" + s.dash + "\"";
    if (s.points.size() > 1) {
      svg << "<polyline " << style << " points=\"";
      for (std::size_t i = 0; i < s.points.size(); ++i) {
        svg << (i ? " " : "") << fmt("%.2f", sx(s.points[i].first)) << ','
            << fmt("%.2f", sy(s.points[i].second));
      }
      svg << "\"/>\n";
    }
    if (s.points.size() <= 40) {
      for (const auto& [x, y] : s.points) {
        svg << "<circle cx=\"" << fmt("%.2f", sx(x)) << "\" cy=\"" << fmt("%.2f", sy(y))
            << "\" r=\"2.5\" fill=\"" << s.color << "\" stroke=\"none\"/>\n";
      }
    }
  }
  svg << "</g>\n";

  // Legend.
  double ly = top + 8;
  const double lx = right - 190;
  for (const Series& s : series) {
    svg << "<line x1=\"" << fmt("%.2f", lx) << "\" y1=\"" << fmt("%.2f", ly) << "\" x2=\""
        << fmt("%.2f", lx + 22) << "\" y2=\"" << fmt("%.2f", ly) << "\" stroke=\"" << s.color
        << "\" stroke-width=\"" << fmt("%.2f", s.width) << "\""
        << (s.dash.empty() ? "" : " stroke-dasharray=\"" + s.dash + "\"") << "/>\n";
    svg << "<text x=\"" << fmt("%.2f", lx + 28) << "\" y=\"" << fmt("%.2f", ly + 4) << "\">"
        << escape(s.label) << "</text>\n";
    ly += 15;
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace confope
