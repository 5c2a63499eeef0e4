#include "tgk/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "tgk/errors.hpp"
#include "tgk/gestures.hpp"

namespace tgk::svg {
namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string exact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void open_doc(std::ostringstream& os, double w, double h) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w) << "\" height=\"" << num(h)
     << "\" viewBox=\"0 0 " << num(w) << ' ' << num(h) << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

// 1-2-5 tick spacing giving about `target` intervals.
double nice_step(double span, int target) {
  if (span <= 0) return 1.0;
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double f = raw / mag;
  const double nice = f < 1.5 ? 1 : f < 3.5 ? 2 : f < 7.5 ? 5 : 10;
  return nice * mag;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
                          "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

constexpr double kFieldMargin = 30.0;

// Taxel centres sit at cell centres; y grows upward in sensor coordinates.
double px_x(double x_cm) { return kFieldMargin + (x_cm / kPitchCm + 0.5) * kCellPx; }
double px_y(double y_cm) {
  return kFieldMargin + (static_cast<double>(kGridRows) - 0.5 - y_cm / kPitchCm) * kCellPx;
}

void field_body(std::ostringstream& os, const TactileFrame& frame) {
  os << "<g class=\"grid\" fill=\"none\" stroke=\"#bbbbbb\" stroke-width=\"1\">\n";
  for (std::size_t r = 0; r < kGridRows; ++r) {
    for (std::size_t c = 0; c < kGridCols; ++c) {
      if (!TaxelGrid::is_valid(r, c)) continue;
      const double cx = px_x(static_cast<double>(c) * kPitchCm);
      const double cy = px_y(static_cast<double>(r) * kPitchCm);
      os << "<rect x=\"" << num(cx - kCellPx / 2) << "\" y=\"" << num(cy - kCellPx / 2)
         << "\" width=\"" << num(kCellPx) << "\" height=\"" << num(kCellPx) << "\"/>\n";
    }
  }
  os << "</g>\n";
  for (std::size_t t = 0; t < kTaxelCount; ++t) {
    const ForceVector& f = frame.forces[t];
    const double cx = px_x(TaxelGrid::x_cm(t));
    const double cy = px_y(TaxelGrid::y_cm(t));
    const double r = circle_radius_px(f.fz);
    if (r > 0) {
      os << "<circle class=\"normal\" data-taxel=\"" << t << "\" data-fz=\"" << exact(f.fz)
         << "\" cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\"" << exact(r)
         << "\" fill=\"#e03030\" fill-opacity=\"0.35\" stroke=\"#e03030\"/>\n";
    }
  }
  for (std::size_t t = 0; t < kTaxelCount; ++t) {
    const ForceVector& f = frame.forces[t];
    const double mag = std::hypot(f.fx, f.fy);
    const double len = arrow_length_px(mag);
    if (len <= 0) continue;
    const double x0 = px_x(TaxelGrid::x_cm(t));
    const double y0 = px_y(TaxelGrid::y_cm(t));
    const double ux = f.fx / mag;
    const double uy = -f.fy / mag;
    const double x1 = x0 + ux * len;
    const double y1 = y0 + uy * len;
    const double head = std::min(6.0, 0.4 * len);
    const double hx = x1 - ux * head;
    const double hy = y1 - uy * head;
    os << "<g class=\"shear\" data-taxel=\"" << t << "\" data-fx=\"" << exact(f.fx)
       << "\" data-fy=\"" << exact(f.fy) << "\" stroke=\"#b00000\" fill=\"#b00000\">"
       << "<line x1=\"" << num(x0) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(hx) << "\" y2=\""
       << num(hy) << "\" stroke-width=\"2\"/>"
       << "<polygon points=\"" << num(x1) << ',' << num(y1) << ' ' << num(hx - uy * head * 0.5)
       << ',' << num(hy + ux * head * 0.5) << ' ' << num(hx + uy * head * 0.5) << ','
       << num(hy - ux * head * 0.5) << "\"/></g>\n";
  }
}

constexpr double kFieldWidth = 2 * kFieldMargin + kGridCols * kCellPx;
constexpr double kFieldHeight = 2 * kFieldMargin + kGridRows * kCellPx;

}  // namespace

double circle_radius_px(double fz) {
  const double a = std::abs(fz);
  if (!(a >= kDrawThresholdN)) return 0.0;
  // Area proportional to force; full scale fills most of a cell.
  return 0.55 * kCellPx * std::sqrt(a / kMaxNormalN);
}

double arrow_length_px(double shear_magnitude) {
  if (!(shear_magnitude >= kDrawThresholdN)) return 0.0;
  return 0.9 * kCellPx * shear_magnitude / kMaxShearN;
}

std::string line_plot(const std::vector<Series>& series, const std::string& title,
                      const std::string& x_label, const std::string& y_label) {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const Series& s : series) {
    if (s.x.size() != s.y.size()) throw ShapeError("line_plot: series '" + s.label + "' x/y length mismatch");
    for (double v : s.x) { xmin = std::min(xmin, v); xmax = std::max(xmax, v); }
    for (double v : s.y) { ymin = std::min(ymin, v); ymax = std::max(ymax, v); }
  }
  if (!std::isfinite(xmin)) { xmin = 0; xmax = 1; ymin = 0; ymax = 1; }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) { ymin -= 1; ymax += 1; }
  const double pad = 0.05 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;

  const double W = 640, H = 420, L = 70, R = 150, T = 40, B = 55;
  const double pw = W - L - R, ph = H - T - B;
  auto sx = [&](double v) { return L + (v - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double v) { return T + (1.0 - (v - ymin) / (ymax - ymin)) * ph; };

  std::ostringstream os;
  open_doc(os, W, H);
  os << "<text x=\"" << num(W / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
     << escape(title) << "</text>\n";
  os << "<rect x=\"" << num(L) << "\" y=\"" << num(T) << "\" width=\"" << num(pw) << "\" height=\""
     << num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<g font-size=\"11\" stroke=\"none\" fill=\"black\">\n";
  const double xs = nice_step(xmax - xmin, 6);
  for (double v = std::ceil(xmin / xs) * xs; v <= xmax + 1e-9 * xs; v += xs) {
    os << "<line x1=\"" << num(sx(v)) << "\" y1=\"" << num(T + ph) << "\" x2=\"" << num(sx(v))
       << "\" y2=\"" << num(T + ph + 5) << "\" stroke=\"black\"/>"
       << "<text x=\"" << num(sx(v)) << "\" y=\"" << num(T + ph + 18)
       << "\" text-anchor=\"middle\">" << num(std::abs(v) < 1e-12 ? 0.0 : v) << "</text>\n";
  }
  const double ys = nice_step(ymax - ymin, 6);
  for (double v = std::ceil(ymin / ys) * ys; v <= ymax + 1e-9 * ys; v += ys) {
    os << "<line x1=\"" << num(L - 5) << "\" y1=\"" << num(sy(v)) << "\" x2=\"" << num(L)
       << "\" y2=\"" << num(sy(v)) << "\" stroke=\"black\"/>"
       << "<text x=\"" << num(L - 8) << "\" y=\"" << num(sy(v) + 4) << "\" text-anchor=\"end\">"
       << num(std::abs(v) < 1e-12 ? 0.0 : v) << "</text>\n";
  }
  os << "<text x=\"" << num(L + pw / 2) << "\" y=\"" << num(H - 12) << "\" text-anchor=\"middle\">"
     << escape(x_label) << "</text>\n";
  os << "<text transform=\"translate(18," << num(T + ph / 2)
     << ") rotate(-90)\" text-anchor=\"middle\">" << escape(y_label) << "</text>\n</g>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const Series& s = series[i];
    const char* color = kPalette[i % std::size(kPalette)];
    os << "<polyline class=\"series\" data-label=\"" << escape(s.label)
       << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (k) os << ' ';
      os << num(sx(s.x[k])) << ',' << num(sy(s.y[k]));
    }
    os << "\"/>\n";
    const double ly = T + 12 + 18.0 * static_cast<double>(i);
    os << "<line x1=\"" << num(L + pw + 12) << "\" y1=\"" << num(ly) << "\" x2=\""
       << num(L + pw + 32) << "\" y2=\"" << num(ly) << "\" stroke=\"" << color
       << "\" stroke-width=\"2\"/><text x=\"" << num(L + pw + 38) << "\" y=\"" << num(ly + 4)
       << "\" font-size=\"11\">" << escape(s.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string confusion_heatmap(const ConfusionMatrix& cm, const std::string& title) {
  const double cell = 38, L = 80, T = 80;
  const double n = static_cast<double>(kGestureClassCount);
  const double W = L + n * cell + 20, H = T + n * cell + 50;
  const auto rates = cm.rates();
  std::ostringstream os;
  open_doc(os, W, H);
  os << "<text x=\"" << num(W / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
     << escape(title) << "</text>\n";
  os << "<g font-size=\"10\">\n";
  for (std::size_t c = 0; c < kGestureClassCount; ++c) {
    const std::string name(gesture_name(gesture_from_code(c)));
    const double off = static_cast<double>(c) * cell + cell / 2;
    os << "<text x=\"" << num(L - 6) << "\" y=\"" << num(T + off + 3)
       << "\" text-anchor=\"end\">" << name << "</text>\n";
    os << "<text transform=\"translate(" << num(L + off + 3) << ',' << num(T - 6)
       << ") rotate(-60)\">" << name << "</text>\n";
  }
  for (std::size_t r = 0; r < kGestureClassCount; ++r) {
    for (std::size_t c = 0; c < kGestureClassCount; ++c) {
      const double v = rates[r][c];
      const int shade = static_cast<int>(std::lround(255.0 * (1.0 - v)));
      char fill[8];
      std::snprintf(fill, sizeof fill, "#ff%02x%02x", shade, shade);
      const double x = L + static_cast<double>(c) * cell;
      const double y = T + static_cast<double>(r) * cell;
      os << "<rect class=\"cell\" data-row=\"" << r << "\" data-col=\"" << c << "\" data-count=\""
         << cm.counts[r][c] << "\" x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\""
         << num(cell) << "\" height=\"" << num(cell) << "\" fill=\"" << fill
         << "\" stroke=\"#dddddd\"/>";
      if (cm.counts[r][c] > 0) {
        os << "<text x=\"" << num(x + cell / 2) << "\" y=\"" << num(y + cell / 2 + 4)
           << "\" text-anchor=\"middle\" fill=\"" << (v > 0.6 ? "white" : "black") << "\">"
           << cm.counts[r][c] << "</text>";
      }
      os << '\n';
    }
  }
  os << "<text x=\"" << num(L + n * cell / 2) << "\" y=\"" << num(H - 14)
     << "\" text-anchor=\"middle\" font-size=\"12\">predicted</text>\n";
  os << "<text transform=\"translate(14," << num(T + n * cell / 2)
     << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"12\">true</text>\n";
  os << "</g>\n</svg>\n";
  return os.str();
}

std::string force_field(const TactileFrame& frame, const std::string& title) {
  std::ostringstream os;
  open_doc(os, kFieldWidth, kFieldHeight);
  os << "<text x=\"" << num(kFieldWidth / 2) << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">"
     << escape(title) << "</text>\n";
  field_body(os, frame);
  os << "</svg>\n";
  return os.str();
}

std::vector<std::size_t> montage_indices(std::size_t frames, std::size_t panels) {
  if (frames == 0 || panels == 0) throw ArgumentError("montage needs at least one frame and panel");
  std::vector<std::size_t> idx;
  if (panels == 1) return {0};
  for (std::size_t k = 0; k < panels; ++k) {
    idx.push_back(static_cast<std::size_t>(std::lround(static_cast<double>(k) *
                                                       static_cast<double>(frames - 1) /
                                                       static_cast<double>(panels - 1))));
  }
  return idx;
}

std::string montage(const std::vector<TactileFrame>& frames, const std::string& title,
                    std::size_t panels) {
  const auto idx = montage_indices(frames.size(), panels);
  const double cols = 3;
  const double rows = std::ceil(static_cast<double>(idx.size()) / cols);
  const double W = cols * kFieldWidth, H = 30 + rows * kFieldHeight;
  std::ostringstream os;
  open_doc(os, W, H);
  os << "<text x=\"" << num(W / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">"
     << escape(title) << "</text>\n";
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const double gx = static_cast<double>(k % 3) * kFieldWidth;
    const double gy = 30 + static_cast<double>(k / 3) * kFieldHeight;
    os << "<g class=\"panel\" data-frame=\"" << idx[k] << "\" transform=\"translate(" << num(gx)
       << ',' << num(gy) << ")\">\n<text x=\"" << num(kFieldWidth / 2)
       << "\" y=\"18\" text-anchor=\"middle\" font-size=\"12\">frame " << idx[k] << "</text>\n";
    field_body(os, frames[idx[k]]);
    os << "</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace tgk::svg
