#pragma once

#include <vector>

#include "dlab/image.hpp"

namespace dlab {

enum class ShapeKind { kRectangle, kSquare, kEllipse, kHeart };

const char* shape_kind_name(ShapeKind kind);

/// Geometric description of one sprite placed on a canvas.
///
/// size meaning per kind:
///   rectangle: {long side, short side}   square: {side}
///   ellipse:   {width, height}           heart:  {width}
/// all in pixels. theta rotates the shape about its center; center is in
/// canvas coordinates where pixel (i, j) covers [i, i+1) x [j, j+1).
struct ShapeSpec {
  ShapeKind kind = ShapeKind::kRectangle;
  std::vector<double> size;
  double theta = 0.0;
  double center_x = 0.0;
  double center_y = 0.0;
};

/// Half-extent of the shape's bounding circle, in pixels.
double shape_bounding_radius(const ShapeSpec& shape);

/// Rasterize a shape to a binary image: each pixel is subdivided into
/// supersample x supersample points and lit iff at least half of them fall
/// inside the shape. Throws ConfigError when the shape leaves the canvas.
Image render_shape(const ShapeSpec& shape, int canvas_width, int canvas_height,
                   int supersample = 8);

/// True if the point (x, y) in shape-local, unrotated coordinates is inside.
bool shape_contains_local(const ShapeSpec& shape, double x, double y);

}  // namespace dlab
