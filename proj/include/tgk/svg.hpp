#pragma once

#include <string>
#include <vector>

#include "tgk/geometry.hpp"
#include "tgk/pipeline.hpp"

namespace tgk::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Axes, ticks, one polyline per series and a legend.
std::string line_plot(const std::vector<Series>& series, const std::string& title,
                      const std::string& x_label, const std::string& y_label);

// Row-normalized rates as cell shading, raw counts as text.
std::string confusion_heatmap(const ConfusionMatrix& cm, const std::string& title);

// Forces below this magnitude draw nothing, which keeps sensor noise off the plot.
inline constexpr double kDrawThresholdN = 0.2;
inline constexpr double kCellPx = 40.0;  // one taxel pitch

// Strictly increasing in |fz| above the threshold, 0 below it.
double circle_radius_px(double fz);
// Strictly increasing in shear magnitude above the threshold, 0 below it.
double arrow_length_px(double shear_magnitude);

// One frame: grid outline of the valid cells, a circle per loaded taxel and
// an arrow per sheared taxel. Circles and arrows carry data-taxel attributes.
std::string force_field(const TactileFrame& frame, const std::string& title);

// Frame indices evenly spread over [0, frames - 1].
std::vector<std::size_t> montage_indices(std::size_t frames, std::size_t panels = 6);
std::string montage(const std::vector<TactileFrame>& frames, const std::string& title,
                    std::size_t panels = 6);

}  // namespace tgk::svg
