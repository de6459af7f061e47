// Copyright 2026 The NACF Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include "adam.hpp"
#include "checkpoint.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace nacf {

using nlohmann::json;

namespace {

int Threads(const TrainConfig& c) { return c.threads > 0 ? c.threads : DefaultThreadCount(); }

const char* StageName(Stage s) { return s == Stage::kMain ? "main" : "refine"; }

struct ItemGrad {
  double loss = 0.0;
  std::vector<ScaleLoss> scales;
  std::vector<Eigen::MatrixXd> grads;  // empty matrix for blocks not on the tape
  Eigen::MatrixXd time_grad;
};

ItemGrad ItemGradient(const Model& model, const TrainItem& item, const LossConfig& loss_cfg, Stage stage,
                      const Eigen::MatrixXd* time_vectors) {
  Tape tape;
  TapeParams p(tape, model.params);
  Var out;
  Var time_leaf;
  if (stage == Stage::kMain) {
    time_leaf = tape.LeafRef(*time_vectors);
    Var ctx = BuildContextTensor(tape, p, model, item.features);
    out = BuildField(tape, p, model, ctx, time_leaf, item.orientation);
  } else {
    out = BuildTemporalRefine(tape, p, model, tape.Constant(item.cached_field));
  }
  std::vector<std::pair<Var, Var>> comps;
  Var loss = BuildTotalLoss(tape, out, item.truth, loss_cfg, &comps);
  if (!std::isfinite(tape.scalar(loss)))
    Fail(ErrorCode::kNonFinite, "non-finite loss for item " + std::to_string(item.index));
  tape.Backward(loss);

  ItemGrad g;
  g.loss = tape.scalar(loss);
  for (const auto& [mag, dcy] : comps) g.scales.push_back({tape.scalar(mag), tape.scalar(dcy)});
  g.grads.resize(model.params.size());
  for (size_t b = 0; b < model.params.size(); ++b)
    if (p.vars()[b].valid()) g.grads[b] = tape.grad(p.vars()[b]);
  if (time_leaf.valid()) g.time_grad = tape.grad(time_leaf);
  return g;
}

void Accumulate(BatchResult& acc, Eigen::MatrixXd& time_grad, const ItemGrad& g) {
  acc.loss += g.loss;
  if (acc.scales.empty()) acc.scales.resize(g.scales.size());
  for (size_t s = 0; s < g.scales.size(); ++s) {
    acc.scales[s].magnitude += g.scales[s].magnitude;
    acc.scales[s].decay += g.scales[s].decay;
  }
  for (size_t b = 0; b < g.grads.size(); ++b)
    if (g.grads[b].size() != 0) acc.grads[b] += g.grads[b];
  if (g.time_grad.size() != 0) time_grad += g.time_grad;
}

json ScalesToJson(const std::vector<ScaleLoss>& scales) {
  json out = json::array();
  for (const auto& s : scales) out.push_back({{"magnitude", s.magnitude}, {"decay", s.decay}});
  return out;
}

class LogWriter {
 public:
  explicit LogWriter(const std::filesystem::path& path) {
    if (path.empty()) return;
    out_.open(path, std::ios::trunc);
    if (!out_) Fail(ErrorCode::kIo, "cannot open log for writing: " + path.string());
  }
  void Write(const json& record) {
    if (!out_.is_open()) return;
    out_ << record.dump() << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
};

json CheckpointMeta(const TrainConfig& config, Stage stage, int epoch) {
  return {{"stage", StageName(stage)},
          {"epoch", epoch},
          {"temporal_trained", stage == Stage::kRefine},
          {"train_config", TrainConfigToJson(config)}};
}

// Shared optimisation loop for both stages.
TrainResult RunLoop(const Dataset& dataset, const TrainConfig& config, Model model, std::vector<TrainItem> items,
                    Stage stage, const std::filesystem::path& out_dir) {
  const LossConfig loss_cfg = config.Loss();
  const int threads = Threads(config);
  std::vector<bool> trainable(model.params.size());
  for (size_t b = 0; b < model.params.size(); ++b)
    trainable[b] = stage == Stage::kMain ? !model.IsConvBlock(b) : model.IsConvBlock(b);

  const std::string prefix = stage == Stage::kMain ? "" : "refine_";
  if (!out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) Fail(ErrorCode::kIo, "cannot create directory " + out_dir.string() + ": " + ec.message());
  }
  LogWriter log_out(out_dir.empty() ? std::filesystem::path() : out_dir / (prefix + "train_log.jsonl"));

  AdamState adam;
  adam.hyper.lr = config.lr;
  TrainResult result;
  double best_loss = std::numeric_limits<double>::infinity();
  const size_t n = items.size();
  const auto batch = static_cast<size_t>(config.batch_size);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto order = EpochOrder(n, config.seed, epoch);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.scales.assign(loss_cfg.scales.size(), ScaleLoss{});
    for (size_t start = 0, b = 0; start < n; start += batch, ++b) {
      std::vector<const TrainItem*> members;
      for (size_t k = start; k < std::min(n, start + batch); ++k) members.push_back(&items[order[k]]);
      BatchResult br;
      try {
        br = BatchGradient(model, members, loss_cfg, stage, threads);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNonFinite) throw;
        Fail(ErrorCode::kNonFinite, "epoch " + std::to_string(epoch) + " batch " + std::to_string(b) + ": " + e.what());
      }
      if (!std::isfinite(br.loss))
        Fail(ErrorCode::kNonFinite, "non-finite loss at epoch " + std::to_string(epoch) + " batch " + std::to_string(b));
      if (epoch == 1 && b == 0) result.log.first_batch_loss = br.loss;
      const double weight = static_cast<double>(members.size()) / static_cast<double>(n);
      rec.loss += br.loss * weight;
      for (size_t s = 0; s < br.scales.size(); ++s) {
        rec.scales[s].magnitude += br.scales[s].magnitude * weight;
        rec.scales[s].decay += br.scales[s].decay * weight;
      }
      AdamStep(model.params.Pointers(), br.grads, adam, trainable);
      ++rec.steps;
    }
    rec.wall_time_sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.total_steps += rec.steps;
    result.log.epochs.push_back(rec);
    log_out.Write(EpochToJson(rec));

    if (rec.loss < best_loss) {
      best_loss = rec.loss;
      result.best_model = model;
      RoundToCheckpointPrecision(result.best_model);
      if (!out_dir.empty())
        SaveCheckpoint(out_dir / (prefix + "best"), result.best_model, CheckpointMeta(config, stage, epoch));
    }
  }
  result.final_model = std::move(model);
  RoundToCheckpointPrecision(result.final_model);
  if (!out_dir.empty())
    SaveCheckpoint(out_dir / (prefix + "final"), result.final_model, CheckpointMeta(config, stage, config.epochs));

  if (!dataset.Indices(Split::kTest).empty()) {
    result.log.test_metrics =
        EvaluateModel(result.final_model, dataset, Split::kTest, stage == Stage::kRefine, threads);
    json summary = ReportToJson(*result.log.test_metrics);
    summary.erase("pairs");
    log_out.Write({{"final_test_metrics", summary}});
  }
  return result;
}

}  // namespace

LossConfig TrainConfig::Loss() const {
  return ablations.use_multiscale ? LossConfig::MultiScale() : LossConfig::SingleScale();
}

void TrainConfig::Validate() const {
  Require(epochs >= 1, "epochs must be at least 1");
  Require(batch_size >= 1, "batch_size must be at least 1");
  Require(lr > 0.0, "lr must be positive");
  Require(train_fraction > 0.0 && train_fraction <= 1.0, "train_fraction must lie in (0, 1]");
  Require(model.latent >= 1 && model.encoder_width >= 1 && model.field_width >= 1 && model.pe_frequencies >= 1,
          "model widths must be positive");
}

json TrainConfigToJson(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"lr", c.lr},
          {"stage", StageName(c.stage)},
          {"ablations",
           {{"use_context", c.ablations.use_context},
            {"use_multiscale", c.ablations.use_multiscale},
            {"use_temporal", c.ablations.use_temporal}}},
          {"train_fraction", c.train_fraction},
          {"seed", c.seed},
          {"model",
           {{"latent", c.model.latent},
            {"encoder_width", c.model.encoder_width},
            {"field_width", c.model.field_width},
            {"pe_frequencies", c.model.pe_frequencies}}},
          {"exact_identity_conv", c.exact_identity_conv}};
}

TrainConfig TrainConfigFromJson(const json& j) {
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.lr = j.value("lr", c.lr);
  if (j.contains("stage")) {
    const auto s = j.at("stage").get<std::string>();
    Require(s == "main" || s == "refine", "stage must be 'main' or 'refine'");
    c.stage = s == "main" ? Stage::kMain : Stage::kRefine;
  }
  if (j.contains("ablations")) {
    const auto& a = j.at("ablations");
    c.ablations.use_context = a.value("use_context", c.ablations.use_context);
    c.ablations.use_multiscale = a.value("use_multiscale", c.ablations.use_multiscale);
    c.ablations.use_temporal = a.value("use_temporal", c.ablations.use_temporal);
  }
  c.train_fraction = j.value("train_fraction", c.train_fraction);
  c.seed = j.value("seed", c.seed);
  if (j.contains("model")) {
    const auto& m = j.at("model");
    c.model.latent = m.value("latent", c.model.latent);
    c.model.encoder_width = m.value("encoder_width", c.model.encoder_width);
    c.model.field_width = m.value("field_width", c.model.field_width);
    c.model.pe_frequencies = m.value("pe_frequencies", c.model.pe_frequencies);
  }
  c.exact_identity_conv = j.value("exact_identity_conv", c.exact_identity_conv);
  c.threads = j.value("threads", c.threads);
  c.Validate();
  return c;
}

json EpochToJson(const EpochRecord& r) {
  return {{"epoch", r.epoch},
          {"steps", r.steps},
          {"loss", r.loss},
          {"scales", ScalesToJson(r.scales)},
          {"wall_time_sec", r.wall_time_sec}};
}

ModelConfig ModelConfigFor(const Dataset& dataset, const TrainConfig& config) {
  const auto& dc = dataset.config;
  ModelConfig mc;
  mc.num_points = dc.num_points;
  mc.rays_per_scan = dc.rays_per_scan;
  mc.num_bands = dc.room.num_bands();
  mc.num_materials = static_cast<int>(dc.room.materials.size());
  mc.footprint_diagonal = dc.room.FootprintDiagonal();
  mc.rir_length = dc.room.rir_length;
  mc.sample_rate = dc.room.sample_rate;
  mc.latent = config.model.latent;
  mc.encoder_width = config.model.encoder_width;
  mc.field_width = config.model.field_width;
  mc.pe_frequencies = config.model.pe_frequencies;
  mc.use_context = config.ablations.use_context;
  mc.Validate();
  return mc;
}

std::vector<int> SubsampleTraining(const std::vector<int>& train, double fraction, uint64_t seed) {
  Require(fraction > 0.0 && fraction <= 1.0, "training fraction must lie in (0, 1]");
  if (fraction == 1.0) return train;
  std::vector<int> order = train;
  Rng rng(seed);
  rng.Shuffle(order);
  const auto keep = static_cast<size_t>(std::llround(fraction * static_cast<double>(train.size())));
  Require(keep > 0, "training fraction selects no items");
  order.resize(keep);
  return order;
}

std::vector<TrainItem> PrepareItems(const Dataset& dataset, const std::vector<int>& indices, const ModelConfig& config) {
  std::vector<TrainItem> items(indices.size());
  for (size_t i = 0; i < indices.size(); ++i) {
    const auto& entry = dataset.entries.at(static_cast<size_t>(indices[i]));
    auto& item = items[i];
    item.index = entry.index;
    item.orientation = entry.query.orientation_index();
    if (config.use_context) item.features = ContextFeatures(config, entry.contexts);
    Rir rir = dataset.LoadRir(entry);
    Require(rir.length() == config.rir_length, "dataset RIR length does not match the model");
    item.truth = std::move(rir.samples);
  }
  return items;
}

std::vector<size_t> EpochOrder(size_t n, uint64_t seed, int epoch) {
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed ^ (0x9e3779b97f4a7c15ULL * static_cast<uint64_t>(epoch)));
  rng.Shuffle(order);
  return order;
}

BatchResult BatchGradient(const Model& model, const std::vector<const TrainItem*>& batch, const LossConfig& loss,
                          Stage stage, int threads) {
  Require(!batch.empty(), "empty batch");
  BatchResult acc;
  acc.grads.resize(model.params.size());
  for (size_t b = 0; b < model.params.size(); ++b)
    acc.grads[b] = Eigen::MatrixXd::Zero(model.params.value(b).rows(), model.params.value(b).cols());

  Tape outer;
  TapeParams outer_params(outer, model.params);
  Var time_vectors;
  Eigen::MatrixXd time_grad;
  if (stage == Stage::kMain) {
    time_vectors = BuildTimeVectors(outer, outer_params, model);
    time_grad = Eigen::MatrixXd::Zero(outer.value(time_vectors).rows(), outer.value(time_vectors).cols());
  }
  const Eigen::MatrixXd* tv = stage == Stage::kMain ? &outer.value(time_vectors) : nullptr;

  // Items reduce in batch order whatever the thread count.
  if (threads <= 1 || batch.size() == 1) {
    for (const auto* item : batch) Accumulate(acc, time_grad, ItemGradient(model, *item, loss, stage, tv));
  } else {
    std::vector<ItemGrad> per_item(batch.size());
    ParallelFor(batch.size(), threads, [&](size_t i) { per_item[i] = ItemGradient(model, *batch[i], loss, stage, tv); });
    for (const auto& g : per_item) Accumulate(acc, time_grad, g);
  }

  if (stage == Stage::kMain) {
    Var seeded = outer.WeightedSum(time_vectors, time_grad);
    outer.Backward(seeded);
    for (size_t b = 0; b < model.params.size(); ++b)
      if (outer_params.vars()[b].valid()) acc.grads[b] += outer.grad(outer_params.vars()[b]);
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  acc.loss *= inv;
  for (auto& s : acc.scales) {
    s.magnitude *= inv;
    s.decay *= inv;
  }
  for (auto& g : acc.grads) g *= inv;
  return acc;
}

TrainResult TrainStageMain(const Dataset& dataset, const TrainConfig& config, const std::filesystem::path& out_dir) {
  config.Validate();
  Require(config.stage == Stage::kMain, "train_stage_main needs stage 'main'");
  const ModelConfig mc = ModelConfigFor(dataset, config);
  const auto train = SubsampleTraining(dataset.Indices(Split::kTrain), config.train_fraction, config.seed);
  auto items = PrepareItems(dataset, train, mc);
  return RunLoop(dataset, config, InitModel(mc, config.seed), std::move(items), Stage::kMain, out_dir);
}

TrainResult TrainStageRefine(const Dataset& dataset, const TrainConfig& config, const Model& main_model,
                             const std::filesystem::path& out_dir) {
  config.Validate();
  Require(config.stage == Stage::kRefine, "train_stage_refine needs stage 'refine'");
  Model model = main_model;
  InitConv(model, config.exact_identity_conv ? ConvInit::kExactIdentity : ConvInit::kIdentityWithNoise,
           config.seed ^ 0x5851f42d4c957f2dULL);
  const auto train = SubsampleTraining(dataset.Indices(Split::kTrain), config.train_fraction, config.seed);
  auto items = PrepareItems(dataset, train, model.config);

  // The field is frozen, so its output per item is computed once.
  Tape time_tape;
  TapeParams tp(time_tape, model.params);
  const Eigen::MatrixXd tv = time_tape.value(BuildTimeVectors(time_tape, tp, model));
  ParallelFor(items.size(), Threads(config), [&](size_t i) {
    Tape tape;
    TapeParams p(tape, model.params);
    Var ctx = BuildContextTensor(tape, p, model, items[i].features);
    items[i].cached_field = tape.value(BuildField(tape, p, model, ctx, tape.LeafRef(tv), items[i].orientation));
  });
  return RunLoop(dataset, config, std::move(model), std::move(items), Stage::kRefine, out_dir);
}

MetricsReport EvaluateModel(const Model& model, const Dataset& dataset, Split split, bool refine, int threads,
                            std::vector<RirPair>* pairs_out) {
  const auto indices = dataset.Indices(split);
  Require(!indices.empty(), "evaluation split is empty");
  std::vector<RirPair> pairs(indices.size());
  ParallelFor(indices.size(), threads > 0 ? threads : DefaultThreadCount(), [&](size_t i) {
    const auto& entry = dataset.entries.at(static_cast<size_t>(indices[i]));
    pairs[i].truth = dataset.LoadRir(entry);
    pairs[i].pred = RenderRir(model, entry.query, entry.contexts, refine);
  });
  MetricsReport report = Evaluate(pairs);
  if (pairs_out) *pairs_out = std::move(pairs);
  return report;
}

std::vector<FewShotPoint> RunFewShot(const Dataset& dataset, const TrainConfig& config,
                                     const std::vector<double>& fractions, const std::vector<uint64_t>& seeds) {
  Require(!fractions.empty() && !seeds.empty(), "few-shot needs fractions and seeds");
  std::vector<FewShotPoint> out;
  for (uint64_t seed : seeds) {
    for (double fraction : fractions) {
      TrainConfig c = config;
      c.stage = Stage::kMain;
      c.seed = seed;
      c.train_fraction = fraction;
      TrainResult r = TrainStageMain(dataset, c, {});
      FewShotPoint pt;
      pt.fraction = fraction;
      pt.seed = seed;
      pt.train_items = static_cast<int>(
          SubsampleTraining(dataset.Indices(Split::kTrain), fraction, seed).size());
      pt.metrics = *r.log.test_metrics;
      out.push_back(std::move(pt));
    }
  }
  return out;
}

}  // namespace nacf
