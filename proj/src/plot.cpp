#include "diip/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

namespace diip {

namespace {

using Rgb = std::array<double, 3>;

constexpr std::array<Rgb, 6> kPalette = {{{0.12, 0.47, 0.71},
                                           {0.84, 0.15, 0.16},
                                           {0.17, 0.63, 0.17},
                                           {1.00, 0.50, 0.05},
                                           {0.58, 0.40, 0.74},
                                           {0.55, 0.34, 0.29}}};

// 3x5 glyphs, one row per 3-bit mask, top to bottom.
std::array<int, 5> glyph(char c) {
  switch (c) {
    case '0': return {7, 5, 5, 5, 7};
    case '1': return {2, 6, 2, 2, 7};
    case '2': return {7, 1, 7, 4, 7};
    case '3': return {7, 1, 7, 1, 7};
    case '4': return {5, 5, 7, 1, 1};
    case '5': return {7, 4, 7, 1, 7};
    case '6': return {7, 4, 7, 5, 7};
    case '7': return {7, 1, 1, 1, 1};
    case '8': return {7, 5, 7, 5, 7};
    case '9': return {7, 5, 7, 1, 7};
    case '.': return {0, 0, 0, 0, 2};
    case '-': return {0, 0, 7, 0, 0};
    case 'e': return {0, 7, 7, 4, 7};
    case '+': return {0, 2, 7, 2, 0};
    default: return {0, 0, 0, 0, 0};
  }
}

struct Canvas {
  Image img;
  void put(int x, int y, const Rgb& c) {
    if (x < 0 || y < 0 || x >= img.width() || y >= img.height()) return;
    for (int ch = 0; ch < 3; ++ch) img.at(y, x, ch) = c[ch];
  }
  void line(int x0, int y0, int x1, int y1, const Rgb& c) {
    const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    for (;;) {
      put(x0, y0, c);
      if (x0 == x1 && y0 == y1) break;
      const int e2 = 2 * err;
      if (e2 >= dy) { err += dy; x0 += sx; }
      if (e2 <= dx) { err += dx; y0 += sy; }
    }
  }
  void text(int x, int y, const std::string& s, const Rgb& c) {
    for (char ch : s) {
      const auto g = glyph(ch);
      for (int r = 0; r < 5; ++r)
        for (int b = 0; b < 3; ++b)
          if (g[r] & (4 >> b)) {
            put(x + 2 * b, y + 2 * r, c);
            put(x + 2 * b + 1, y + 2 * r, c);
            put(x + 2 * b, y + 2 * r + 1, c);
            put(x + 2 * b + 1, y + 2 * r + 1, c);
          }
      x += 8;
    }
  }
};

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

Image render_line_plot(const std::vector<Series>& series, const PlotOptions& opt) {
  if (opt.width < 64 || opt.height < 64) throw Error("plot: canvas too small");
  Canvas cv{Image(opt.height, opt.width, 3, 1.0)};
  auto ty = [&](double y) { return opt.log_y ? std::log10(y) : y; };
  auto usable = [&](double y) { return std::isfinite(y) && (!opt.log_y || y > 0); };

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const auto& s : series)
    for (auto [x, y] : s.points) {
      if (!usable(y) || !std::isfinite(x)) continue;
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, ty(y));
      ymax = std::max(ymax, ty(y));
    }
  if (!(xmin <= xmax)) throw Error("plot: no finite points");
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;

  const int left = 70, right = opt.width - 15, top = 15, bottom = opt.height - 30;
  const Rgb black{0, 0, 0};
  cv.line(left, top, left, bottom, black);
  cv.line(left, bottom, right, bottom, black);
  for (int i = 0; i <= 4; ++i) {
    const int px = left + (right - left) * i / 4, py = bottom - (bottom - top) * i / 4;
    cv.line(px, bottom, px, bottom + 4, black);
    cv.line(left - 4, py, left, py, black);
  }
  cv.text(left, bottom + 10, label(xmin), black);
  const std::string xm = label(xmax);
  cv.text(right - 8 * static_cast<int>(xm.size()), bottom + 10, xm, black);
  const std::string y0 = opt.log_y ? "1e" + label(ymin) : label(ymin);
  const std::string y1 = opt.log_y ? "1e" + label(ymax) : label(ymax);
  cv.text(4, bottom - 10, y0, black);
  cv.text(4, top, y1, black);

  for (std::size_t si = 0; si < series.size(); ++si) {
    const Rgb& c = kPalette[si % kPalette.size()];
    bool have = false;
    int px = 0, py = 0;
    for (auto [x, y] : series[si].points) {
      if (!usable(y) || !std::isfinite(x)) {
        have = false;
        continue;
      }
      const int qx = left + static_cast<int>(std::lround((x - xmin) / (xmax - xmin) * (right - left)));
      const int qy = bottom - static_cast<int>(std::lround((ty(y) - ymin) / (ymax - ymin) * (bottom - top)));
      if (have) cv.line(px, py, qx, qy, c);
      else cv.put(qx, qy, c);
      px = qx;
      py = qy;
      have = true;
    }
  }
  return cv.img;
}

}  // namespace diip
