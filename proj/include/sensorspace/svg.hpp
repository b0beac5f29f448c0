// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

namespace sensorspace::svg {

// Minimal hand-rolled SVG: one polyline and/or one scatter per plot.
// Enough for trace and bias-scan reports, no plotting dependency.
class Plot {
 public:
  Plot(int width = 640, int height = 400) : width_(width), height_(height) {}

  void add_line(const std::vector<double>& xs, const std::vector<double>& ys,
                const std::string& color = "#e69f00") {
    lines_.push_back({xs, ys, color});
    extend_range(xs, ys);
  }

  void add_scatter(const std::vector<double>& xs, const std::vector<double>& ys,
                   const std::string& color = "#0072b2") {
    scatters_.push_back({xs, ys, color});
    extend_range(xs, ys);
  }

  std::string render() const {
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_
        << "\" height=\"" << height_ << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (const auto& s : scatters_) {
      for (size_t i = 0; i < s.xs.size(); ++i) {
        out << "<circle cx=\"" << px(s.xs[i]) << "\" cy=\"" << py(s.ys[i])
            << "\" r=\"2.5\" fill=\"" << s.color << "\" fill-opacity=\"0.6\"/>\n";
      }
    }
    for (const auto& l : lines_) {
      out << "<polyline fill=\"none\" stroke=\"" << l.color
          << "\" stroke-width=\"2\" points=\"";
      for (size_t i = 0; i < l.xs.size(); ++i) {
        if (i) out << ' ';
        out << px(l.xs[i]) << ',' << py(l.ys[i]);
      }
      out << "\"/>\n";
    }
    out << "</svg>\n";
    return out.str();
  }

 private:
  struct Series {
    std::vector<double> xs, ys;
    std::string color;
  };

  void extend_range(const std::vector<double>& xs,
                    const std::vector<double>& ys) {
    for (double x : xs) {
      xmin_ = std::min(xmin_, x);
      xmax_ = std::max(xmax_, x);
    }
    for (double y : ys) {
      ymin_ = std::min(ymin_, y);
      ymax_ = std::max(ymax_, y);
    }
  }

  double px(double x) const {
    const double span = xmax_ > xmin_ ? xmax_ - xmin_ : 1.0;
    return margin_ + (x - xmin_) / span * (width_ - 2 * margin_);
  }

  double py(double y) const {
    const double span = ymax_ > ymin_ ? ymax_ - ymin_ : 1.0;
    return height_ - margin_ - (y - ymin_) / span * (height_ - 2 * margin_);
  }

  int width_, height_;
  int margin_ = 40;
  double xmin_ = 1e300, xmax_ = -1e300, ymin_ = 1e300, ymax_ = -1e300;
  std::vector<Series> lines_;
  std::vector<Series> scatters_;
};

}  // namespace sensorspace::svg
