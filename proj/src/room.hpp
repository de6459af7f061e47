// Copyright 2026 The NACF Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "dsp.hpp"

namespace nacf {

using Vec2 = Eigen::Vector2d;

// Per-band coefficients, each in [0, 1].
struct Material {
  std::string name;
  std::vector<double> absorption;
  std::vector<double> scattering;
  std::vector<double> transmission;
};

// Surface indices into RoomSpec::surface_material.
enum Surface : int { kWallX0 = 0, kWallX1, kWallY0, kWallY1, kFloor, kCeiling, kNumSurfaces };

struct RoomSpec {
  double width = 5.0;   // x extent
  double length = 4.0;  // y extent
  double height = 3.0;  // z extent
  std::array<int, kNumSurfaces> surface_material{};
  std::vector<Material> materials;
  int max_image_order = 3;
  double speed_of_sound = 343.0;
  int sample_rate = 16000;
  int rir_length = 4096;
  // Half the inter-ear distance; zero collapses both ears onto the receiver.
  double ear_offset = 0.0875;

  int num_bands() const;
  void Validate() const;
  // Frequency-independent pressure reflection coefficient of a surface,
  // sqrt(1 - mean band absorption).
  double ReflectionCoefficient(int surface) const;
  double FootprintDiagonal() const;
};

// Orientation is one of 0, 90, 180, 270 degrees; the receiver faces
// (cos theta, sin theta).
struct Query {
  Vec2 emitter = Vec2::Zero();
  Vec2 receiver = Vec2::Zero();
  int orientation_deg = 0;
  double z_height = 1.5;

  int orientation_index() const { return orientation_deg / 90; }
  void Validate(const RoomSpec& room) const;
};

// Left and right ear positions for a query.
std::array<Vec2, 2> EarPositions(const Query& query, double ear_offset);

struct BoundaryContext {
  std::vector<double> depth_scan;     // K ray lengths, meters
  std::vector<double> material_desc;  // one-hot material + mean (abs, scat, trans)
  Eigen::MatrixXd acoustic_coeffs;    // P x 3
  Vec2 position = Vec2::Zero();
  Vec2 emitter_disp = Vec2::Zero();   // emitter - position
  Vec2 receiver_disp = Vec2::Zero();  // receiver - position
  int surface = 0;
};

// Sums image sources up to max_image_order into a binaural response.
Rir SimulateRir(const RoomSpec& room, const Query& query);

// Mono response at an arbitrary receiver point; the binaural path calls this
// once per ear.
Eigen::VectorXd SimulateMono(const RoomSpec& room, const Eigen::Vector3d& source,
                             const Eigen::Vector3d& receiver);

// Fractional-delay kernel shared with SimulateMono: adds amplitude * h(n - delay)
// with an 81-tap Hann-windowed sinc.
void AddFractionalImpulse(Eigen::Ref<Eigen::VectorXd> out, double delay_samples, double amplitude);
inline constexpr int kSincHalfTaps = 40;

// N points at equal arc length around the footprint, starting half a spacing
// from the (0, 0) corner and walking counter-clockwise.
std::vector<std::pair<Vec2, int>> BoundaryPoints(const RoomSpec& room, int num_points);

std::vector<BoundaryContext> ExtractContexts(const RoomSpec& room, const Query& query,
                                             int num_points, int rays_per_scan);

// Distance from a boundary point along a unit direction to the footprint edge.
double RayToFootprint(const RoomSpec& room, const Vec2& origin, const Vec2& direction);

// Default desk-scale scene: 5 x 4 x 3 m with three materials over three bands.
RoomSpec DefaultRoom();

}  // namespace nacf
