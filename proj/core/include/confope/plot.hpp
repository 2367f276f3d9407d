#pragma once

#include <span>
#include <string>

#include "confope/experiments.hpp"

namespace confope {

struct PlotOptions {
  std::string title;
  int width = 720;
  int height = 480;
};

/**
 * Renders result rows as a self-contained SVG line chart.
 *
 * Rows spanning several horizons give bound vs horizon, one line per
 * (method, gamma, delta), with the nominal value drawn as a dotted curve.
 * Otherwise the chart is bound vs gamma: fqe in black, robust and
 * single-step lines shaded light to dark by increasing delta, naive dashed
 * grey, and dotted horizontal lines for the nominal and behavior values.
 * Output depends only on the rows. Throws ValidationError if `rows` is empty.
 */
std::string render_svg(std::span<const BoundResult> rows, const PlotOptions& options = {});

}  // namespace confope
