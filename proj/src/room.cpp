// Copyright 2026 The NACF Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "room.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <string>

#include "error.hpp"

namespace nacf {
namespace {

double Mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

bool InUnit(double x) { return x >= 0.0 && x <= 1.0; }

// Position of image `u` along one axis and the number of hits on the low
// (coordinate 0) and high (coordinate extent) walls.
struct AxisImage {
  double coord;
  int low_hits;
  int high_hits;
};

AxisImage ImageAlongAxis(int u, double source, double extent) {
  AxisImage img{};
  if (u % 2 == 0)
    img.coord = u * extent + source;
  else
    img.coord = (u + 1) * extent - source;
  const int a = std::abs(u);
  if (u >= 0) {
    img.high_hits = (a + 1) / 2;
    img.low_hits = a / 2;
  } else {
    img.low_hits = (a + 1) / 2;
    img.high_hits = a / 2;
  }
  return img;
}

}  // namespace

int RoomSpec::num_bands() const {
  return materials.empty() ? 0 : static_cast<int>(materials.front().absorption.size());
}

void RoomSpec::Validate() const {
  Require(width > 0.0 && length > 0.0 && height > 0.0, "room dimensions must be positive");
  Require(!materials.empty(), "room needs at least one material");
  Require(max_image_order >= 0 && max_image_order <= 30, "max_image_order must lie in [0, 30]");
  Require(speed_of_sound > 0.0, "speed_of_sound must be positive");
  Require(sample_rate > 0, "sample_rate must be positive");
  Require(rir_length > 0, "rir_length must be positive");
  Require(ear_offset >= 0.0, "ear_offset must be non-negative");
  const size_t bands = materials.front().absorption.size();
  Require(bands > 0, "materials need at least one band");
  for (const auto& m : materials) {
    Require(m.absorption.size() == bands && m.scattering.size() == bands &&
                m.transmission.size() == bands,
            "material '" + m.name + "' band count mismatch");
    for (size_t b = 0; b < bands; ++b) {
      Require(InUnit(m.absorption[b]) && InUnit(m.scattering[b]) && InUnit(m.transmission[b]),
              "material '" + m.name + "' coefficients must lie in [0, 1]");
      Require(m.absorption[b] + m.transmission[b] <= 1.0 + 1e-12,
              "material '" + m.name + "' absorption + transmission exceeds 1");
    }
  }
  for (int id : surface_material)
    Require(id >= 0 && id < static_cast<int>(materials.size()), "surface material id out of range");
}

double RoomSpec::ReflectionCoefficient(int surface) const {
  const auto& m = materials[static_cast<size_t>(surface_material[static_cast<size_t>(surface)])];
  return std::sqrt(1.0 - Mean(m.absorption));
}

double RoomSpec::FootprintDiagonal() const { return std::hypot(width, length); }

void Query::Validate(const RoomSpec& room) const {
  auto inside = [&](const Vec2& p) {
    return p.x() > 0.0 && p.x() < room.width && p.y() > 0.0 && p.y() < room.length;
  };
  Require(inside(emitter), "emitter must lie strictly inside the room footprint");
  Require(inside(receiver), "receiver must lie strictly inside the room footprint");
  Require(orientation_deg == 0 || orientation_deg == 90 || orientation_deg == 180 ||
              orientation_deg == 270,
          "orientation must be one of 0, 90, 180, 270 degrees");
  Require(z_height > 0.0 && z_height < room.height, "z_height must lie strictly inside the room");
}

std::array<Vec2, 2> EarPositions(const Query& query, double ear_offset) {
  // Exact unit vectors for the four discrete orientations.
  static constexpr int kCos[4] = {1, 0, -1, 0};
  static constexpr int kSin[4] = {0, 1, 0, -1};
  const int k = query.orientation_index() & 3;
  const Vec2 left_dir(-kSin[k], kCos[k]);
  return {query.receiver + ear_offset * left_dir, query.receiver - ear_offset * left_dir};
}

void AddFractionalImpulse(Eigen::Ref<Eigen::VectorXd> out, double delay_samples, double amplitude) {
  const long n_out = out.size();
  const long center = std::lround(delay_samples);
  const double half_width = kSincHalfTaps + 1.0;
  for (long n = center - kSincHalfTaps; n <= center + kSincHalfTaps; ++n) {
    if (n < 0 || n >= n_out) continue;
    const double x = static_cast<double>(n) - delay_samples;
    if (std::abs(x) >= half_width) continue;
    const double window = 0.5 * (1.0 + std::cos(std::numbers::pi * x / half_width));
    const double sinc = x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
    out[n] += amplitude * window * sinc;
  }
}

Eigen::VectorXd SimulateMono(const RoomSpec& room, const Eigen::Vector3d& source,
                             const Eigen::Vector3d& receiver) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(room.rir_length);
  if ((source - receiver).norm() == 0.0)
    Fail(ErrorCode::kDegenerateGeometry, "emitter coincides with a receiver position");

  const std::array<double, 3> extent{room.width, room.length, room.height};
  std::array<double, 3> low_beta{}, high_beta{};
  for (int axis = 0; axis < 3; ++axis) {
    low_beta[static_cast<size_t>(axis)] = room.ReflectionCoefficient(2 * axis);
    high_beta[static_cast<size_t>(axis)] = room.ReflectionCoefficient(2 * axis + 1);
  }
  const int order = room.max_image_order;
  const double samples_per_meter = room.sample_rate / room.speed_of_sound;

  for (int ux = -order; ux <= order; ++ux) {
    const AxisImage ix = ImageAlongAxis(ux, source.x(), extent[0]);
    const double gx = std::pow(low_beta[0], ix.low_hits) * std::pow(high_beta[0], ix.high_hits);
    const int ry = order - std::abs(ux);
    for (int uy = -ry; uy <= ry; ++uy) {
      const AxisImage iy = ImageAlongAxis(uy, source.y(), extent[1]);
      const double gy = std::pow(low_beta[1], iy.low_hits) * std::pow(high_beta[1], iy.high_hits);
      const int rz = ry - std::abs(uy);
      for (int uz = -rz; uz <= rz; ++uz) {
        const AxisImage iz = ImageAlongAxis(uz, source.z(), extent[2]);
        const double gz = std::pow(low_beta[2], iz.low_hits) * std::pow(high_beta[2], iz.high_hits);
        const Eigen::Vector3d image(ix.coord, iy.coord, iz.coord);
        const double dist = (image - receiver).norm();
        const double delay = dist * samples_per_meter;
        if (delay - kSincHalfTaps - 1.0 >= room.rir_length) continue;
        const double amp = gx * gy * gz / (4.0 * std::numbers::pi * dist);
        AddFractionalImpulse(out, delay, amp);
      }
    }
  }
  return out;
}

Rir SimulateRir(const RoomSpec& room, const Query& query) {
  room.Validate();
  query.Validate(room);
  const auto ears = EarPositions(query, room.ear_offset);
  const Eigen::Vector3d src(query.emitter.x(), query.emitter.y(), query.z_height);
  Rir rir;
  rir.sample_rate = room.sample_rate;
  rir.samples.resize(room.rir_length, 2);
  for (int c = 0; c < 2; ++c) {
    const auto& ear = ears[static_cast<size_t>(c)];
    const Eigen::Vector3d rcv(ear.x(), ear.y(), query.z_height);
    rir.samples.col(c) = SimulateMono(room, src, rcv);
  }
  return rir;
}

std::vector<std::pair<Vec2, int>> BoundaryPoints(const RoomSpec& room, int num_points) {
  Require(num_points >= 1, "need at least one boundary point");
  const double w = room.width, l = room.length;
  const double perimeter = 2.0 * (w + l);
  std::vector<std::pair<Vec2, int>> points;
  points.reserve(static_cast<size_t>(num_points));
  for (int i = 0; i < num_points; ++i) {
    double s = (i + 0.5) * perimeter / num_points;
    if (s < w) {
      points.emplace_back(Vec2(s, 0.0), kWallY0);
      continue;
    }
    s -= w;
    if (s < l) {
      points.emplace_back(Vec2(w, s), kWallX1);
      continue;
    }
    s -= l;
    if (s < w) {
      points.emplace_back(Vec2(w - s, l), kWallY1);
      continue;
    }
    s -= w;
    points.emplace_back(Vec2(0.0, l - std::min(s, l)), kWallX0);
  }
  return points;
}

double RayToFootprint(const RoomSpec& room, const Vec2& origin, const Vec2& direction) {
  const std::array<double, 2> extent{room.width, room.length};
  double t = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 2; ++a) {
    const double d = direction[a];
    if (d > 0.0)
      t = std::min(t, (extent[static_cast<size_t>(a)] - origin[a]) / d);
    else if (d < 0.0)
      t = std::min(t, -origin[a] / d);
  }
  return std::max(t, 0.0);
}

std::vector<BoundaryContext> ExtractContexts(const RoomSpec& room, const Query& query,
                                             int num_points, int rays_per_scan) {
  room.Validate();
  Require(rays_per_scan >= 1, "need at least one ray per depth scan");
  const auto points = BoundaryPoints(room, num_points);
  const int num_materials = static_cast<int>(room.materials.size());
  const int bands = room.num_bands();

  std::vector<BoundaryContext> out;
  out.reserve(points.size());
  for (const auto& [pos, surface] : points) {
    BoundaryContext ctx;
    ctx.position = pos;
    ctx.surface = surface;
    ctx.emitter_disp = query.emitter - pos;
    ctx.receiver_disp = query.receiver - pos;

    Vec2 normal;
    switch (surface) {
      case kWallY0: normal = Vec2(0.0, 1.0); break;
      case kWallX1: normal = Vec2(-1.0, 0.0); break;
      case kWallY1: normal = Vec2(0.0, -1.0); break;
      default: normal = Vec2(1.0, 0.0); break;
    }
    ctx.depth_scan.resize(static_cast<size_t>(rays_per_scan));
    for (int k = 0; k < rays_per_scan; ++k) {
      const double phi = -0.5 * std::numbers::pi + std::numbers::pi * (k + 0.5) / rays_per_scan;
      const Vec2 dir(normal.x() * std::cos(phi) - normal.y() * std::sin(phi),
                     normal.x() * std::sin(phi) + normal.y() * std::cos(phi));
      ctx.depth_scan[static_cast<size_t>(k)] = RayToFootprint(room, pos, dir);
    }

    const int mat_id = room.surface_material[static_cast<size_t>(surface)];
    const auto& mat = room.materials[static_cast<size_t>(mat_id)];
    ctx.material_desc.assign(static_cast<size_t>(num_materials + 3), 0.0);
    ctx.material_desc[static_cast<size_t>(mat_id)] = 1.0;
    ctx.material_desc[static_cast<size_t>(num_materials)] = Mean(mat.absorption);
    ctx.material_desc[static_cast<size_t>(num_materials + 1)] = Mean(mat.scattering);
    ctx.material_desc[static_cast<size_t>(num_materials + 2)] = Mean(mat.transmission);

    ctx.acoustic_coeffs.resize(bands, 3);
    for (int b = 0; b < bands; ++b) {
      ctx.acoustic_coeffs(b, 0) = mat.absorption[static_cast<size_t>(b)];
      ctx.acoustic_coeffs(b, 1) = mat.scattering[static_cast<size_t>(b)];
      ctx.acoustic_coeffs(b, 2) = mat.transmission[static_cast<size_t>(b)];
    }
    out.push_back(std::move(ctx));
  }
  return out;
}

RoomSpec DefaultRoom() {
  RoomSpec room;
  room.materials = {
      {"plaster", {0.30, 0.35, 0.40}, {0.10, 0.15, 0.20}, {0.02, 0.01, 0.01}},
      {"wood", {0.20, 0.25, 0.30}, {0.20, 0.25, 0.30}, {0.05, 0.03, 0.02}},
      {"carpet", {0.50, 0.60, 0.70}, {0.30, 0.40, 0.50}, {0.00, 0.00, 0.00}},
  };
  // x0, x1, y0, y1, floor, ceiling
  room.surface_material = {0, 1, 0, 0, 2, 0};
  room.max_image_order = 20;
  return room;
}

}  // namespace nacf
