#include "core/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace af::plot {

namespace {

struct Canvas {
  int h, w;
  std::vector<double> px;  // rgb interleaved, [0,1]

  Canvas(int height, int width, double fill = 1.0)
      : h(height), w(width), px(static_cast<size_t>(height) * width * 3, fill) {}

  void set(int y, int x, double r, double g, double b) {
    if (y < 0 || y >= h || x < 0 || x >= w) return;
    size_t i = (static_cast<size_t>(y) * w + x) * 3;
    px[i] = r;
    px[i + 1] = g;
    px[i + 2] = b;
  }

  Image to_image() const { return Image(h, w, ValueRange::Unit, px); }
};

void draw_line(Canvas& c, int y0, int x0, int y1, int x1, double r, double g,
               double b) {
  int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    c.set(y0, x0, r, g, b);
    if (x0 == x1 && y0 == y1) break;
    int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

// 4x6 glyphs for tick labels: digits plus '.', '-', 'e'
const char* glyph(char ch) {
  switch (ch) {
    case '0': return "111101101101101111";
    case '1': return "010110010010010111";
    case '2': return "111001111100100111";
    case '3': return "111001111001001111";
    case '4': return "101101111001001001";
    case '5': return "111100111001001111";
    case '6': return "111100111101101111";
    case '7': return "111001001010010010";
    case '8': return "111101111101101111";
    case '9': return "111101111001001111";
    case '.': return "000000000000000010";
    case '-': return "000000111000000000";
    case 'e': return "000000111101110011";
    default: return nullptr;
  }
}

void draw_text(Canvas& c, int y, int x, const std::string& text) {
  for (char ch : text) {
    const char* g = glyph(ch);
    if (g) {
      for (int gy = 0; gy < 6; ++gy)
        for (int gx = 0; gx < 3; ++gx)
          if (g[gy * 3 + gx] == '1') c.set(y + gy, x + gx, 0.1, 0.1, 0.1);
    }
    x += 4;
  }
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

}  // namespace

Image line_chart(const std::vector<double>& xs, const std::vector<double>& ys,
                 int width, int height) {
  require(xs.size() == ys.size() && !xs.empty(), "line chart needs matching x/y");
  Canvas c(height, width);
  const int ml = 56, mr = 16, mt = 16, mb = 32;  // margins
  const int x0 = ml, x1 = width - mr, y0 = height - mb, y1 = mt;
  double xmin = *std::min_element(xs.begin(), xs.end());
  double xmax = *std::max_element(xs.begin(), xs.end());
  double ymin = std::min(0.0, *std::min_element(ys.begin(), ys.end()));
  double ymax = *std::max_element(ys.begin(), ys.end());
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) ymax = ymin + 1.0;
  ymax *= 1.05;

  auto px = [&](double x) {
    return x0 + static_cast<int>((x - xmin) / (xmax - xmin) * (x1 - x0));
  };
  auto py = [&](double y) {
    return y0 - static_cast<int>((y - ymin) / (ymax - ymin) * (y0 - y1));
  };

  // axes
  draw_line(c, y0, x0, y0, x1, 0.2, 0.2, 0.2);
  draw_line(c, y0, x0, y1, x0, 0.2, 0.2, 0.2);
  // ticks: one per data x, four on y
  for (double x : xs) {
    int tx = px(x);
    draw_line(c, y0, tx, y0 + 3, tx, 0.2, 0.2, 0.2);
    std::string label = tick_label(x);
    draw_text(c, y0 + 6, tx - static_cast<int>(label.size()) * 2, label);
  }
  for (int i = 0; i <= 4; ++i) {
    double yv = ymin + (ymax - ymin) * i / 4.0;
    int ty = py(yv);
    draw_line(c, ty, x0 - 3, ty, x0, 0.2, 0.2, 0.2);
    std::string label = tick_label(yv);
    draw_text(c, ty - 3, x0 - 6 - static_cast<int>(label.size()) * 4, label);
    for (int gx = x0 + 1; gx < x1; gx += 2) c.set(ty, gx, 0.9, 0.9, 0.9);
  }
  // polyline with point markers
  for (size_t i = 0; i + 1 < xs.size(); ++i)
    draw_line(c, py(ys[i]), px(xs[i]), py(ys[i + 1]), px(xs[i + 1]), 0.80, 0.25,
              0.10);
  for (size_t i = 0; i < xs.size(); ++i) {
    int cx = px(xs[i]), cy = py(ys[i]);
    for (int dy = -2; dy <= 2; ++dy)
      for (int dx = -2; dx <= 2; ++dx)
        if (dx * dx + dy * dy <= 4) c.set(cy + dy, cx + dx, 0.80, 0.25, 0.10);
  }
  return c.to_image();
}

Image plane_to_image(const Plane& p) {
  std::vector<double> px(static_cast<size_t>(p.h) * p.w * 3);
  for (size_t i = 0; i < p.v.size(); ++i) {
    double v = std::clamp(p.v[i], 0.0, 1.0);
    px[i * 3] = px[i * 3 + 1] = px[i * 3 + 2] = v;
  }
  return Image(p.h, p.w, ValueRange::Unit, std::move(px));
}

Image compose_grid(const std::vector<Image>& tiles, int columns, int gap) {
  require(!tiles.empty() && columns >= 1, "grid needs tiles and columns");
  int th = tiles[0].height(), tw = tiles[0].width();
  for (const auto& t : tiles)
    require(t.height() == th && t.width() == tw, "grid tiles must share a size");
  int rows = (static_cast<int>(tiles.size()) + columns - 1) / columns;
  int H = rows * th + (rows - 1) * gap;
  int W = columns * tw + (columns - 1) * gap;
  Canvas c(H, W, 1.0);
  for (size_t i = 0; i < tiles.size(); ++i) {
    int r = static_cast<int>(i) / columns, col = static_cast<int>(i) % columns;
    Image unit = tiles[i].to_range(ValueRange::Unit);
    int oy = r * (th + gap), ox = col * (tw + gap);
    for (int y = 0; y < th; ++y)
      for (int x = 0; x < tw; ++x)
        c.set(oy + y, ox + x, unit.at(y, x, 0), unit.at(y, x, 1),
              unit.at(y, x, 2));
  }
  return c.to_image();
}

}  // namespace af::plot
