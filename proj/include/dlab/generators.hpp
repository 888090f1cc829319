#pragma once

#include <array>
#include <cstdint>

#include "dlab/dataset.hpp"

namespace dlab {

enum class CoordSystem { kCartesian, kPolar };
enum class TransformKind { kY, kX, kDiagonal, kCycle, kRotation, kRandom };

TransformKind transform_kind_from_name(std::string_view name);
const char* transform_kind_name(TransformKind kind);

/// Translation family built from an 11x5 rectangle on a 64x64 canvas:
/// A1 = (theta 0, cartesian), A2 = (theta 0, polar), A3 = (45 deg, cartesian).
/// Cartesian grids are grid x grid equally spaced positions over the
/// orientation-safe range; polar grids use grid radius levels x grid angles.
ImageDataset gen_translation_dataset(double theta, CoordSystem coords, int grid = 40,
                                     int canvas = 64);

/// Single-factor family: n equally spaced translations of a theta-oriented
/// rectangle along the X axis, spanning total distance `length`, centered on
/// the canvas. length == 0 degenerates to n identical frames.
ImageDataset gen_a4(double theta, double length, int n, int canvas = 64);

/// Procedural dSprites-style grid over (shape, scale, orientation, posX, posY).
/// The full parameterization is 3 shapes x 6 scales x 40 orientations x 32 x 32
/// positions; `cardinalities` subsamples each factor with evenly spaced indices.
ImageDataset gen_dsprites(const std::array<int, 5>& cardinalities, int canvas = 64);

/// One-transformation datasets: translation along y / x / the (1,1) diagonal,
/// a circular path, in-place rotation, or seeded random positions.
ImageDataset gen_transformation_suite(TransformKind kind, int n, std::uint64_t seed,
                                      int canvas = 64);

/// Two-factor toy mix of a significant and an insignificant action:
/// full-span X translation crossed with in-place rotation.
ImageDataset gen_two_action_mix(int n_positions, int n_orientations, int canvas = 64);

/// Largest admissible translation span for gen_a4 on the given canvas.
double a4_max_length(int canvas = 64);

}  // namespace dlab
