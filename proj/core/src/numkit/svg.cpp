#include "sflow/numkit/svg.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sflow::numkit::svg {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 55;
constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                 "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string fixed(double v, int precision = 2) {
  if (std::abs(v) < 0.5 * std::pow(10.0, -precision)) v = 0.0;
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, precision);
  return {buf, r.ptr};
}

std::string tick(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 3);
  return {buf, r.ptr};
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!std::isfinite(lo)) lo = 0, hi = 1;
    if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
  }
};

class Frame {
 public:
  Frame(const Axes& axes, Range x, Range y) : axes_(axes), x_(x), y_(y) {
    if (axes.log_x) x_ = {std::log10(std::max(x.lo, 1e-300)), std::log10(std::max(x.hi, 1e-300))};
    if (axes.log_y) y_ = {std::log10(std::max(y.lo, 1e-300)), std::log10(std::max(y.hi, 1e-300))};
    x_.finish();
    y_.finish();
    out_ = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(kWidth, 0) + "\" height=\"" +
           fixed(kHeight, 0) + "\" viewBox=\"0 0 " + fixed(kWidth, 0) + " " + fixed(kHeight, 0) +
           "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out_ += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out_ += "<text x=\"" + fixed(kWidth / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
            escape(axes.title) + "</text>\n";
    const double x1 = kWidth - kRight, y1 = kHeight - kBottom;
    out_ += "<rect x=\"" + fixed(kLeft) + "\" y=\"" + fixed(kTop) + "\" width=\"" + fixed(x1 - kLeft) +
            "\" height=\"" + fixed(y1 - kTop) + "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
      const double fx = x_.lo + (x_.hi - x_.lo) * i / 4.0, fy = y_.lo + (y_.hi - y_.lo) * i / 4.0;
      const double px = kLeft + (x1 - kLeft) * i / 4.0, py = y1 - (y1 - kTop) * i / 4.0;
      out_ += "<text x=\"" + fixed(px) + "\" y=\"" + fixed(y1 + 16) + "\" text-anchor=\"middle\">" +
              tick(axes.log_x ? std::pow(10.0, fx) : fx) + "</text>\n";
      out_ += "<text x=\"" + fixed(kLeft - 6) + "\" y=\"" + fixed(py + 4) + "\" text-anchor=\"end\">" +
              tick(axes.log_y ? std::pow(10.0, fy) : fy) + "</text>\n";
    }
    out_ += "<text x=\"" + fixed((kLeft + x1) / 2) + "\" y=\"" + fixed(kHeight - 14) + "\" text-anchor=\"middle\">" +
            escape(axes.x_label) + "</text>\n";
    out_ += "<text x=\"16\" y=\"" + fixed((kTop + y1) / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
            fixed((kTop + y1) / 2) + ")\">" + escape(axes.y_label) + "</text>\n";
  }

  double px(double x) const {
    if (axes_.log_x) x = std::log10(std::max(x, 1e-300));
    return kLeft + (x - x_.lo) / (x_.hi - x_.lo) * (kWidth - kRight - kLeft);
  }
  double py(double y) const {
    if (axes_.log_y) y = std::log10(std::max(y, 1e-300));
    return kHeight - kBottom - (y - y_.lo) / (y_.hi - y_.lo) * (kHeight - kBottom - kTop);
  }

  void legend(std::size_t slot, const std::string& label, const char* colour) {
    const double y = kTop + 10 + 18 * static_cast<double>(slot);
    const double x = kWidth - kRight + 12;
    out_ += "<rect x=\"" + fixed(x) + "\" y=\"" + fixed(y - 8) + "\" width=\"12\" height=\"8\" fill=\"" + colour +
            "\"/>\n<text x=\"" + fixed(x + 18) + "\" y=\"" + fixed(y) + "\">" + escape(label) + "</text>\n";
  }

  std::string& body() { return out_; }
  std::string finish() { return out_ + "</svg>\n"; }

 private:
  Axes axes_;
  Range x_, y_;
  std::string out_;
};

std::pair<Range, Range> bounds(const std::vector<Series>& series) {
  Range x, y;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("svg: series '" + s.label + "' has mismatched x/y");
    for (double v : s.x) x.add(v);
    for (double v : s.y) y.add(v);
  }
  return {x, y};
}

}  // namespace

std::string line_plot(const Axes& axes, const std::vector<Series>& series) {
  auto [x, y] = bounds(series);
  Frame f(axes, x, y);
  std::size_t slot = 0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* colour = kPalette[i % kPalette.size()];
    std::string pts;
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
      if (!pts.empty()) pts.push_back(' ');
      pts += fixed(f.px(s.x[k])) + "," + fixed(f.py(s.y[k]));
    }
    f.body() += "<polyline fill=\"none\" stroke=\"" + std::string(colour) + "\" stroke-width=\"1.2\" points=\"" + pts +
                "\"/>\n";
    if (!s.label.empty()) f.legend(slot++, s.label, colour);
  }
  return f.finish();
}

std::string scatter_plot(const Axes& axes, const std::vector<Series>& series) {
  auto [x, y] = bounds(series);
  Frame f(axes, x, y);
  std::size_t slot = 0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* colour = kPalette[i % kPalette.size()];
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
      f.body() += "<circle cx=\"" + fixed(f.px(s.x[k])) + "\" cy=\"" + fixed(f.py(s.y[k])) + "\" r=\"2\" fill=\"" +
                  colour + "\"/>\n";
    }
    if (!s.label.empty()) f.legend(slot++, s.label, colour);
  }
  return f.finish();
}

std::string histogram_plot(const Axes& axes, const std::vector<double>& edges, const std::vector<std::size_t>& counts) {
  if (edges.size() != counts.size() + 1) throw std::invalid_argument("svg: histogram needs bins + 1 edges");
  Range x, y;
  for (double e : edges) x.add(e);
  y.add(0.0);
  for (auto c : counts) y.add(static_cast<double>(c));
  Frame f(axes, x, y);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) continue;
    const double x0 = f.px(edges[i]), x1 = f.px(edges[i + 1]);
    const double top = f.py(static_cast<double>(counts[i])), base = f.py(0.0);
    f.body() += "<rect x=\"" + fixed(x0) + "\" y=\"" + fixed(top) + "\" width=\"" + fixed(x1 - x0) + "\" height=\"" +
                fixed(base - top) + "\" fill=\"" + kPalette[0] + "\" stroke=\"white\" stroke-width=\"0.5\"/>\n";
  }
  return f.finish();
}

}  // namespace sflow::numkit::svg
