// Copyright 2026 The NACF Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dataset.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "error.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "wav.hpp"

namespace nacf {

using nlohmann::json;

namespace {

json Vec(const Vec2& v) { return json::array({v.x(), v.y()}); }
Vec2 VecFrom(const json& j) { return Vec2(j.at(0).get<double>(), j.at(1).get<double>()); }

const char* SplitName(Split s) { return s == Split::kTrain ? "train" : "test"; }

}  // namespace

json ReadJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot open for reading: " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    Fail(ErrorCode::kFormat, path.string() + ": " + e.what());
  }
}

void WriteJsonFile(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) Fail(ErrorCode::kIo, "cannot open for writing: " + path.string());
  out << j.dump(2) << '\n';
  if (!out) Fail(ErrorCode::kIo, "write failed: " + path.string());
}

json RoomToJson(const RoomSpec& room) {
  json mats = json::array();
  for (const auto& m : room.materials)
    mats.push_back({{"name", m.name},
                    {"absorption", m.absorption},
                    {"scattering", m.scattering},
                    {"transmission", m.transmission}});
  return {{"width", room.width},
          {"length", room.length},
          {"height", room.height},
          {"surface_material", room.surface_material},
          {"materials", mats},
          {"max_image_order", room.max_image_order},
          {"speed_of_sound", room.speed_of_sound},
          {"sample_rate", room.sample_rate},
          {"rir_length", room.rir_length},
          {"ear_offset", room.ear_offset}};
}

RoomSpec RoomFromJson(const json& j) {
  RoomSpec room = DefaultRoom();
  room.width = j.value("width", room.width);
  room.length = j.value("length", room.length);
  room.height = j.value("height", room.height);
  if (j.contains("surface_material"))
    room.surface_material = j.at("surface_material").get<std::array<int, kNumSurfaces>>();
  if (j.contains("materials")) {
    room.materials.clear();
    for (const auto& m : j.at("materials"))
      room.materials.push_back({m.value("name", std::string()),
                                m.at("absorption").get<std::vector<double>>(),
                                m.at("scattering").get<std::vector<double>>(),
                                m.at("transmission").get<std::vector<double>>()});
  }
  room.max_image_order = j.value("max_image_order", room.max_image_order);
  room.speed_of_sound = j.value("speed_of_sound", room.speed_of_sound);
  room.sample_rate = j.value("sample_rate", room.sample_rate);
  room.rir_length = j.value("rir_length", room.rir_length);
  room.ear_offset = j.value("ear_offset", room.ear_offset);
  room.Validate();
  return room;
}

json DatasetConfigToJson(const DatasetConfig& config) {
  json receivers = json::array();
  for (const auto& r : config.grid.receivers) receivers.push_back(Vec(r));
  return {{"room", RoomToJson(config.room)},
          {"grid",
           {{"emitters_x", config.grid.emitters_x},
            {"emitters_y", config.grid.emitters_y},
            {"margin", config.grid.margin},
            {"receivers", receivers},
            {"orientations", config.grid.orientations}}},
          {"context", {{"num_points", config.num_points}, {"rays_per_scan", config.rays_per_scan}}},
          {"test_fraction", config.test_fraction},
          {"z_height", config.z_height}};
}

DatasetConfig DatasetConfigFromJson(const json& j) {
  DatasetConfig c;
  if (j.contains("room")) c.room = RoomFromJson(j.at("room"));
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    c.grid.emitters_x = g.value("emitters_x", c.grid.emitters_x);
    c.grid.emitters_y = g.value("emitters_y", c.grid.emitters_y);
    c.grid.margin = g.value("margin", c.grid.margin);
    if (g.contains("receivers"))
      for (const auto& r : g.at("receivers")) c.grid.receivers.push_back(VecFrom(r));
    if (g.contains("orientations")) c.grid.orientations = g.at("orientations").get<std::vector<int>>();
  }
  if (j.contains("context")) {
    c.num_points = j.at("context").value("num_points", c.num_points);
    c.rays_per_scan = j.at("context").value("rays_per_scan", c.rays_per_scan);
  }
  c.test_fraction = j.value("test_fraction", c.test_fraction);
  c.z_height = j.value("z_height", c.z_height);
  if (c.grid.receivers.empty()) c.grid.receivers = DefaultReceivers(c.room);
  Require(c.grid.emitters_x >= 1 && c.grid.emitters_y >= 1, "emitter grid must be non-empty");
  Require(c.grid.margin >= 0.2, "grid margin must be at least 0.2 m");
  Require(c.test_fraction >= 0.0 && c.test_fraction < 1.0, "test_fraction must lie in [0, 1)");
  Require(c.num_points >= 1 && c.rays_per_scan >= 1, "context needs num_points >= 1 and rays_per_scan >= 1");
  return c;
}

json ContextToJson(const BoundaryContext& ctx) {
  json coeffs = json::array();
  for (int b = 0; b < ctx.acoustic_coeffs.rows(); ++b)
    coeffs.push_back({ctx.acoustic_coeffs(b, 0), ctx.acoustic_coeffs(b, 1), ctx.acoustic_coeffs(b, 2)});
  return {{"depth_scan", ctx.depth_scan},
          {"material_desc", ctx.material_desc},
          {"acoustic_coeffs", coeffs},
          {"position", Vec(ctx.position)},
          {"emitter_disp", Vec(ctx.emitter_disp)},
          {"receiver_disp", Vec(ctx.receiver_disp)},
          {"surface", ctx.surface}};
}

BoundaryContext ContextFromJson(const json& j) {
  BoundaryContext ctx;
  ctx.depth_scan = j.at("depth_scan").get<std::vector<double>>();
  ctx.material_desc = j.at("material_desc").get<std::vector<double>>();
  const auto& coeffs = j.at("acoustic_coeffs");
  ctx.acoustic_coeffs.resize(static_cast<Eigen::Index>(coeffs.size()), 3);
  for (size_t b = 0; b < coeffs.size(); ++b)
    for (int k = 0; k < 3; ++k) ctx.acoustic_coeffs(static_cast<Eigen::Index>(b), k) = coeffs[b].at(static_cast<size_t>(k)).get<double>();
  ctx.position = VecFrom(j.at("position"));
  ctx.emitter_disp = VecFrom(j.at("emitter_disp"));
  ctx.receiver_disp = VecFrom(j.at("receiver_disp"));
  ctx.surface = j.value("surface", 0);
  return ctx;
}

std::vector<Vec2> DefaultReceivers(const RoomSpec& room) {
  // Off the emitter grid lines of the default 10 x 10 layout.
  return {Vec2(0.26 * room.width, 0.275 * room.length), Vec2(0.74 * room.width, 0.275 * room.length),
          Vec2(0.26 * room.width, 0.725 * room.length), Vec2(0.74 * room.width, 0.725 * room.length)};
}

std::vector<Query> EnumerateQueries(const DatasetConfig& config) {
  const auto& g = config.grid;
  const auto& room = config.room;
  auto axis = [&](int count, double extent, int i) {
    if (count == 1) return 0.5 * extent;
    return g.margin + (extent - 2.0 * g.margin) * i / (count - 1);
  };
  const auto receivers = g.receivers.empty() ? DefaultReceivers(room) : g.receivers;
  for (const auto& r : receivers)
    Require(r.x() >= g.margin && r.x() <= room.width - g.margin && r.y() >= g.margin &&
                r.y() <= room.length - g.margin,
            "receiver positions must keep the wall margin");
  std::vector<Query> out;
  for (int ix = 0; ix < g.emitters_x; ++ix) {
    for (int iy = 0; iy < g.emitters_y; ++iy) {
      const Vec2 e(axis(g.emitters_x, room.width, ix), axis(g.emitters_y, room.length, iy));
      for (const auto& r : receivers) {
        for (int o : g.orientations) {
          Query q;
          q.emitter = e;
          q.receiver = r;
          q.orientation_deg = o;
          q.z_height = config.z_height;
          out.push_back(q);
        }
      }
    }
  }
  return out;
}

std::vector<Split> AssignSplits(size_t n, double test_fraction, uint64_t seed) {
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.Shuffle(order);
  const auto n_test = static_cast<size_t>(std::llround(test_fraction * static_cast<double>(n)));
  std::vector<Split> splits(n, Split::kTrain);
  for (size_t k = 0; k < n_test; ++k) splits[order[k]] = Split::kTest;
  return splits;
}

void GenerateDataset(const DatasetConfig& config, const std::filesystem::path& out_dir,
                     uint64_t seed, int threads) {
  config.room.Validate();
  const auto queries = EnumerateQueries(config);
  for (const auto& q : queries) q.Validate(config.room);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) Fail(ErrorCode::kIo, "cannot create directory " + out_dir.string() + ": " + ec.message());

  std::vector<json> contexts(queries.size());
  ParallelFor(queries.size(), threads, [&](size_t i) {
    const Rir rir = SimulateRir(config.room, queries[i]);
    WriteWav(out_dir / ("rir_" + std::to_string(i) + ".wav"), rir);
    json pts = json::array();
    for (const auto& ctx : ExtractContexts(config.room, queries[i], config.num_points, config.rays_per_scan))
      pts.push_back(ContextToJson(ctx));
    contexts[i] = std::move(pts);
  });

  const auto splits = AssignSplits(queries.size(), config.test_fraction, seed);
  json entries = json::array();
  for (size_t i = 0; i < queries.size(); ++i) {
    entries.push_back({{"index", i},
                       {"emitter", Vec(queries[i].emitter)},
                       {"receiver", Vec(queries[i].receiver)},
                       {"orientation", queries[i].orientation_deg},
                       {"file", "rir_" + std::to_string(i) + ".wav"},
                       {"split", SplitName(splits[i])}});
  }
  json manifest = {{"format", "nacf-dataset"},
                   {"version", 1},
                   {"seed", seed},
                   {"config", DatasetConfigToJson(config)},
                   {"contexts_file", "contexts.json"},
                   {"entries", entries}};
  WriteJsonFile(out_dir / "contexts.json", json(contexts));
  WriteJsonFile(out_dir / "manifest.json", manifest);
}

std::vector<int> Dataset::Indices(Split split) const {
  std::vector<int> out;
  for (const auto& e : entries)
    if (e.split == split) out.push_back(e.index);
  return out;
}

Rir Dataset::LoadRir(const Entry& entry) const { return ReadWav(dir / entry.file); }

Dataset LoadDataset(const std::filesystem::path& dir) {
  const json manifest = ReadJsonFile(dir / "manifest.json");
  if (manifest.value("format", std::string()) != "nacf-dataset")
    Fail(ErrorCode::kFormat, (dir / "manifest.json").string() + ": not a dataset manifest");
  Dataset ds;
  ds.dir = dir;
  ds.seed = manifest.value("seed", uint64_t{0});
  ds.config = DatasetConfigFromJson(manifest.at("config"));
  const json contexts = ReadJsonFile(dir / manifest.value("contexts_file", std::string("contexts.json")));
  for (const auto& je : manifest.at("entries")) {
    Entry e;
    e.index = je.at("index").get<int>();
    e.query.emitter = VecFrom(je.at("emitter"));
    e.query.receiver = VecFrom(je.at("receiver"));
    e.query.orientation_deg = je.at("orientation").get<int>();
    e.query.z_height = ds.config.z_height;
    e.file = je.at("file").get<std::string>();
    e.split = je.at("split").get<std::string>() == "test" ? Split::kTest : Split::kTrain;
    if (e.index < 0 || static_cast<size_t>(e.index) >= contexts.size())
      Fail(ErrorCode::kFormat, "manifest entry index has no contexts");
    for (const auto& jc : contexts.at(static_cast<size_t>(e.index))) e.contexts.push_back(ContextFromJson(jc));
    ds.entries.push_back(std::move(e));
  }
  for (size_t i = 0; i < ds.entries.size(); ++i)
    if (ds.entries[i].index != static_cast<int>(i)) Fail(ErrorCode::kFormat, "manifest entries must be ordered by index");
  return ds;
}

}  // namespace nacf
