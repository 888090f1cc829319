#include "dlab/shapes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "dlab/errors.hpp"

namespace dlab {

namespace {

// Canonical heart region (x^2 + y^2 - 1)^3 - x^2*y^3 <= 0 spans
// x in [-1.139, 1.139], y in [-1.0, 1.236], bounding radius 1.4246.
constexpr double kHeartHalfWidth = 1.139;
constexpr double kHeartRadius = 1.4246;

double side(const ShapeSpec& s, std::size_t i) {
  if (i >= s.size.size()) {
    throw ConfigError(std::string(shape_kind_name(s.kind)) + " needs " +
                      std::to_string(i + 1) + " size parameter(s)");
  }
  return s.size[i];
}

}  // namespace

const char* shape_kind_name(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::kRectangle: return "rectangle";
    case ShapeKind::kSquare: return "square";
    case ShapeKind::kEllipse: return "ellipse";
    case ShapeKind::kHeart: return "heart";
  }
  return "?";
}

bool shape_contains_local(const ShapeSpec& shape, double x, double y) {
  switch (shape.kind) {
    case ShapeKind::kRectangle: {
      double hl = side(shape, 0) / 2.0, hw = side(shape, 1) / 2.0;
      return std::abs(x) <= hl && std::abs(y) <= hw;
    }
    case ShapeKind::kSquare: {
      double h = side(shape, 0) / 2.0;
      return std::abs(x) <= h && std::abs(y) <= h;
    }
    case ShapeKind::kEllipse: {
      double a = side(shape, 0) / 2.0, b = side(shape, 1) / 2.0;
      double u = x / a, v = y / b;
      return u * u + v * v <= 1.0;
    }
    case ShapeKind::kHeart: {
      // Flip y so the lobes point up in image coordinates (y grows down).
      double scale = side(shape, 0) / (2.0 * kHeartHalfWidth);
      double u = x / scale, v = -y / scale;
      double r = u * u + v * v - 1.0;
      return r * r * r - u * u * v * v * v <= 0.0;
    }
  }
  return false;
}

double shape_bounding_radius(const ShapeSpec& shape) {
  switch (shape.kind) {
    case ShapeKind::kRectangle: {
      double l = side(shape, 0), w = side(shape, 1);
      return std::sqrt(l * l + w * w) / 2.0;
    }
    case ShapeKind::kSquare: {
      double s = side(shape, 0);
      return s * std::numbers::sqrt2 / 2.0;
    }
    case ShapeKind::kEllipse:
      return std::max(side(shape, 0), side(shape, 1)) / 2.0;
    case ShapeKind::kHeart:
      return side(shape, 0) / (2.0 * kHeartHalfWidth) * kHeartRadius;
  }
  return 0.0;
}

Image render_shape(const ShapeSpec& shape, int canvas_width, int canvas_height,
                   int supersample) {
  if (canvas_width <= 0 || canvas_height <= 0 || supersample <= 0) {
    throw ConfigError("render_shape: canvas and supersample must be positive");
  }
  for (double s : shape.size) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw ConfigError("render_shape: non-finite or non-positive size parameter");
    }
  }
  if (!std::isfinite(shape.theta) || !std::isfinite(shape.center_x) ||
      !std::isfinite(shape.center_y)) {
    throw ConfigError("render_shape: non-finite placement");
  }

  double radius = shape_bounding_radius(shape);
  double over = std::max(
      {radius - shape.center_x, radius - shape.center_y,
       shape.center_x + radius - canvas_width, shape.center_y + radius - canvas_height});
  if (over > 0.0) {
    throw ConfigError(std::string(shape_kind_name(shape.kind)) +
                      " extends outside the canvas by up to " + std::to_string(over) +
                      " px (center " + std::to_string(shape.center_x) + ", " +
                      std::to_string(shape.center_y) + ")");
  }

  double theta = std::fmod(shape.theta, 2.0 * std::numbers::pi);
  if (theta < 0.0) theta += 2.0 * std::numbers::pi;
  double c = std::cos(theta), s = std::sin(theta);

  Image out{canvas_width, canvas_height,
            std::vector<std::uint8_t>(static_cast<std::size_t>(canvas_width) * canvas_height, 0)};

  // Only pixels under the bounding circle can be lit.
  int x0 = std::max(0, static_cast<int>(std::floor(shape.center_x - radius)));
  int x1 = std::min(canvas_width - 1, static_cast<int>(std::ceil(shape.center_x + radius)));
  int y0 = std::max(0, static_cast<int>(std::floor(shape.center_y - radius)));
  int y1 = std::min(canvas_height - 1, static_cast<int>(std::ceil(shape.center_y + radius)));

  const int n = supersample;
  const int need = n * n - n * n / 2;  // lit iff covered >= ceil(n^2/2)
  for (int py = y0; py <= y1; ++py) {
    for (int px = x0; px <= x1; ++px) {
      int covered = 0;
      for (int sy = 0; sy < n; ++sy) {
        double wy = py + (sy + 0.5) / n - shape.center_y;
        for (int sx = 0; sx < n; ++sx) {
          double wx = px + (sx + 0.5) / n - shape.center_x;
          // Rotate the canvas offset back into shape-local coordinates.
          double lx = c * wx + s * wy;
          double ly = -s * wx + c * wy;
          if (shape_contains_local(shape, lx, ly)) ++covered;
        }
      }
      if (covered >= need) {
        out.pixels[static_cast<std::size_t>(py) * canvas_width + px] = 1;
      }
    }
  }
  return out;
}

}  // namespace dlab
