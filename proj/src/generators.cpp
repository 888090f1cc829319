#include "dlab/generators.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "dlab/errors.hpp"
#include "dlab/rng.hpp"
#include "dlab/shapes.hpp"

namespace dlab {

namespace {

constexpr double kRectLong = 11.0;
constexpr double kRectShort = 5.0;
constexpr double kPi = std::numbers::pi;

// Margin keeping the rectangle in-canvas at every orientation.
int rect_margin() {
  ShapeSpec s{ShapeKind::kRectangle, {kRectLong, kRectShort}, 0.0, 0.0, 0.0};
  return static_cast<int>(std::ceil(shape_bounding_radius(s)));
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) {
    v[i] = n > 1 ? lo + (hi - lo) * i / (n - 1) : lo;
  }
  return v;
}

// k evenly spaced indices from {0 .. full-1}, endpoints included.
std::vector<int> subsample_indices(int full, int k) {
  if (k < 1 || k > full) throw ConfigError("requested cardinality outside [1, full grid]");
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) {
    idx[i] = k > 1 ? static_cast<int>(std::lround(static_cast<double>(i) * (full - 1) / (k - 1)))
                   : 0;
  }
  return idx;
}

Image render_rect(double theta, double cx, double cy, int canvas) {
  ShapeSpec s{ShapeKind::kRectangle, {kRectLong, kRectShort}, theta, cx, cy};
  return render_shape(s, canvas, canvas);
}

}  // namespace

TransformKind transform_kind_from_name(std::string_view name) {
  if (name == "y") return TransformKind::kY;
  if (name == "x") return TransformKind::kX;
  if (name == "diagonal") return TransformKind::kDiagonal;
  if (name == "cycle") return TransformKind::kCycle;
  if (name == "rotation") return TransformKind::kRotation;
  if (name == "random") return TransformKind::kRandom;
  throw ConfigError("unknown transformation kind \"" + std::string(name) + "\"");
}

const char* transform_kind_name(TransformKind kind) {
  switch (kind) {
    case TransformKind::kY: return "y";
    case TransformKind::kX: return "x";
    case TransformKind::kDiagonal: return "diagonal";
    case TransformKind::kCycle: return "cycle";
    case TransformKind::kRotation: return "rotation";
    case TransformKind::kRandom: return "random";
  }
  return "?";
}

ImageDataset gen_translation_dataset(double theta, CoordSystem coords, int grid, int canvas) {
  if (grid < 1) throw ConfigError("grid must be >= 1");
  int margin = rect_margin();
  if (2 * margin >= canvas) {
    throw ConfigError("canvas " + std::to_string(canvas) + " too small for the rectangle");
  }
  double lo = margin, hi = canvas - margin;
  double center = canvas / 2.0;

  FactorSpec spec;
  if (coords == CoordSystem::kCartesian) {
    spec.factors.push_back({"posX", linspace(lo, hi, grid)});
    spec.factors.push_back({"posY", linspace(lo, hi, grid)});
  } else {
    double r_max = center - margin;
    std::vector<double> phis(grid);
    for (int i = 0; i < grid; ++i) phis[i] = 2.0 * kPi * i / grid;
    spec.factors.push_back({"r", linspace(0.0, r_max, grid)});
    spec.factors.push_back({"phi", phis});
  }

  ImageDataset out(canvas, canvas, spec);
  for (std::uint32_t i = 0; i < static_cast<std::uint32_t>(grid); ++i) {
    for (std::uint32_t j = 0; j < static_cast<std::uint32_t>(grid); ++j) {
      double cx, cy;
      if (coords == CoordSystem::kCartesian) {
        cx = spec.factors[0].values[i];
        cy = spec.factors[1].values[j];
      } else {
        double r = spec.factors[0].values[i], phi = spec.factors[1].values[j];
        cx = center + r * std::cos(phi);
        cy = center + r * std::sin(phi);
      }
      out.add_image(render_rect(theta, cx, cy, canvas), {i, j});
    }
  }
  return out;
}

double a4_max_length(int canvas) { return canvas - 2.0 * rect_margin(); }

ImageDataset gen_a4(double theta, double length, int n, int canvas) {
  if (n < 2) throw ConfigError("gen_a4 needs n >= 2");
  if (length < 0.0) throw ConfigError("gen_a4 needs length >= 0");
  if (length > a4_max_length(canvas)) {
    throw ConfigError("translation span " + std::to_string(length) +
                      " exceeds the admissible " + std::to_string(a4_max_length(canvas)));
  }
  double center = canvas / 2.0;

  FactorSpec spec;
  spec.factors.push_back({"posX", linspace(center - length / 2.0, center + length / 2.0, n)});

  ImageDataset out(canvas, canvas, spec);
  for (std::uint32_t i = 0; i < static_cast<std::uint32_t>(n); ++i) {
    out.add_image(render_rect(theta, spec.factors[0].values[i], center, canvas), {i});
  }
  return out;
}

ImageDataset gen_dsprites(const std::array<int, 5>& cardinalities, int canvas) {
  // Full parameterization. Sizes are chosen so the three shapes have roughly
  // equal area at equal scale.
  constexpr double kSquareSide = 14.0;
  constexpr double kEllipseWidth = 22.3;
  constexpr double kEllipseHeight = 11.2;
  constexpr double kHeartWidth = 16.7;
  const std::array<ShapeKind, 3> kShapes = {ShapeKind::kSquare, ShapeKind::kEllipse,
                                            ShapeKind::kHeart};
  const int kFull[5] = {3, 6, 40, 32, 32};

  for (int k = 0; k < 5; ++k) {
    if (cardinalities[k] < 1 || cardinalities[k] > kFull[k]) {
      throw ConfigError("dsprites cardinality " + std::to_string(cardinalities[k]) +
                        " outside [1, " + std::to_string(kFull[k]) + "] for factor " +
                        std::to_string(k));
    }
  }

  std::vector<double> scales = linspace(0.5, 1.0, kFull[1]);
  std::vector<double> orientations(kFull[2]);
  for (int i = 0; i < kFull[2]; ++i) orientations[i] = 2.0 * kPi * i / kFull[2];

  // Margin from the largest bounding radius at full scale.
  double radius = 0.0;
  for (ShapeKind kind : kShapes) {
    ShapeSpec s{kind, {}, 0.0, 0.0, 0.0};
    if (kind == ShapeKind::kSquare) s.size = {kSquareSide};
    if (kind == ShapeKind::kEllipse) s.size = {kEllipseWidth, kEllipseHeight};
    if (kind == ShapeKind::kHeart) s.size = {kHeartWidth};
    radius = std::max(radius, shape_bounding_radius(s));
  }
  double margin = std::ceil(radius);
  std::vector<double> positions = linspace(margin, canvas - margin, kFull[3]);

  auto pick = [](const std::vector<double>& full, const std::vector<int>& idx) {
    std::vector<double> v;
    v.reserve(idx.size());
    for (int i : idx) v.push_back(full[i]);
    return v;
  };

  std::vector<int> shape_idx = subsample_indices(kFull[0], cardinalities[0]);
  std::vector<int> scale_idx = subsample_indices(kFull[1], cardinalities[1]);
  std::vector<int> orient_idx = subsample_indices(kFull[2], cardinalities[2]);
  std::vector<int> posx_idx = subsample_indices(kFull[3], cardinalities[3]);
  std::vector<int> posy_idx = subsample_indices(kFull[4], cardinalities[4]);

  FactorSpec spec;
  std::vector<double> shape_values;
  for (int i : shape_idx) shape_values.push_back(i);
  spec.factors.push_back({"shape", shape_values});
  spec.factors.push_back({"scale", pick(scales, scale_idx)});
  spec.factors.push_back({"orientation", pick(orientations, orient_idx)});
  spec.factors.push_back({"posX", pick(positions, posx_idx)});
  spec.factors.push_back({"posY", pick(positions, posy_idx)});

  ImageDataset out(canvas, canvas, spec);
  for (std::uint32_t si = 0; si < shape_idx.size(); ++si) {
    for (std::uint32_t ci = 0; ci < scale_idx.size(); ++ci) {
      double s = spec.factors[1].values[ci];
      for (std::uint32_t oi = 0; oi < orient_idx.size(); ++oi) {
        for (std::uint32_t xi = 0; xi < posx_idx.size(); ++xi) {
          for (std::uint32_t yi = 0; yi < posy_idx.size(); ++yi) {
            ShapeSpec shape;
            shape.kind = kShapes[shape_idx[si]];
            if (shape.kind == ShapeKind::kSquare) shape.size = {kSquareSide * s};
            if (shape.kind == ShapeKind::kEllipse) shape.size = {kEllipseWidth * s, kEllipseHeight * s};
            if (shape.kind == ShapeKind::kHeart) shape.size = {kHeartWidth * s};
            shape.theta = spec.factors[2].values[oi];
            shape.center_x = spec.factors[3].values[xi];
            shape.center_y = spec.factors[4].values[yi];
            out.add_image(render_shape(shape, canvas, canvas), {si, ci, oi, xi, yi});
          }
        }
      }
    }
  }
  return out;
}

ImageDataset gen_transformation_suite(TransformKind kind, int n, std::uint64_t seed, int canvas) {
  if (n < 2) throw ConfigError("transformation suite needs n >= 2");
  int margin = rect_margin();
  double lo = margin, hi = canvas - margin;
  double center = canvas / 2.0;
  double span = hi - lo;

  FactorSpec spec;
  std::vector<std::pair<double, double>> centers(n);
  std::vector<double> thetas(n, 0.0);

  switch (kind) {
    case TransformKind::kY: {
      spec.factors.push_back({"posY", linspace(lo, hi, n)});
      for (int i = 0; i < n; ++i) centers[i] = {center, spec.factors[0].values[i]};
      break;
    }
    case TransformKind::kX: {
      spec.factors.push_back({"posX", linspace(lo, hi, n)});
      for (int i = 0; i < n; ++i) centers[i] = {spec.factors[0].values[i], center};
      break;
    }
    case TransformKind::kDiagonal: {
      // Moves along (1,1)/sqrt(2); the factor value is the distance travelled.
      spec.factors.push_back({"dist", linspace(0.0, span * std::numbers::sqrt2, n)});
      std::vector<double> c = linspace(lo, hi, n);
      for (int i = 0; i < n; ++i) centers[i] = {c[i], c[i]};
      break;
    }
    case TransformKind::kCycle: {
      std::vector<double> angles(n);
      for (int i = 0; i < n; ++i) angles[i] = 2.0 * kPi * i / n;
      spec.factors.push_back({"angle", angles});
      double radius = span / 2.0;
      for (int i = 0; i < n; ++i) {
        centers[i] = {center + radius * std::cos(angles[i]),
                      center + radius * std::sin(angles[i])};
      }
      break;
    }
    case TransformKind::kRotation: {
      std::vector<double> angles(n);
      for (int i = 0; i < n; ++i) angles[i] = 2.0 * kPi * i / n;
      spec.factors.push_back({"angle", angles});
      for (int i = 0; i < n; ++i) {
        centers[i] = {center, center};
        thetas[i] = angles[i];
      }
      break;
    }
    case TransformKind::kRandom: {
      std::vector<double> steps(n);
      for (int i = 0; i < n; ++i) steps[i] = i;
      spec.factors.push_back({"step", steps});
      RandomStream rng(seed, "random-translation");
      for (int i = 0; i < n; ++i) {
        centers[i] = {rng.uniform(lo, hi), rng.uniform(lo, hi)};
      }
      break;
    }
  }

  ImageDataset out(canvas, canvas, spec);
  for (std::uint32_t i = 0; i < static_cast<std::uint32_t>(n); ++i) {
    out.add_image(render_rect(thetas[i], centers[i].first, centers[i].second, canvas), {i});
  }
  return out;
}

ImageDataset gen_two_action_mix(int n_positions, int n_orientations, int canvas) {
  if (n_positions < 2 || n_orientations < 2) {
    throw ConfigError("two-action mix needs at least 2 values per factor");
  }
  int margin = rect_margin();
  double center = canvas / 2.0;

  FactorSpec spec;
  spec.factors.push_back({"posX", linspace(margin, canvas - margin, n_positions)});
  std::vector<double> angles(n_orientations);
  for (int i = 0; i < n_orientations; ++i) angles[i] = 2.0 * kPi * i / n_orientations;
  spec.factors.push_back({"orientation", angles});

  ImageDataset out(canvas, canvas, spec);
  for (std::uint32_t i = 0; i < static_cast<std::uint32_t>(n_positions); ++i) {
    for (std::uint32_t j = 0; j < static_cast<std::uint32_t>(n_orientations); ++j) {
      out.add_image(render_rect(angles[j], spec.factors[0].values[i], center, canvas), {i, j});
    }
  }
  return out;
}

}  // namespace dlab
