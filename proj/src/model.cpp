// Copyright 2026 The NACF Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "model.hpp"

#include <cmath>

#include "error.hpp"
#include "rng.hpp"

namespace nacf {

using nlohmann::json;

namespace {

constexpr const char* kModalityNames[kNumModalities] = {"depth", "material", "acoustic",
                                                        "position", "emitter", "receiver"};

Eigen::MatrixXd KaimingUniform(Rng& rng, int fan_in, int fan_out) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Eigen::MatrixXd w(fan_in, fan_out);
  for (Eigen::Index c = 0; c < w.cols(); ++c)
    for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = rng.Uniform(-bound, bound);
  return w;
}

Eigen::MatrixXd Gaussian(Rng& rng, int rows, int cols, double scale) {
  Eigen::MatrixXd w(rows, cols);
  for (Eigen::Index c = 0; c < w.cols(); ++c)
    for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = scale * rng.Normal();
  return w;
}

Mlp2Ids AddMlp2(ParamStore& ps, Rng& rng, const std::string& prefix, int in, int hidden, int out) {
  Mlp2Ids ids;
  ids.w1 = ps.Add(prefix + ".w1", KaimingUniform(rng, in, hidden));
  ids.b1 = ps.Add(prefix + ".b1", Eigen::MatrixXd::Zero(1, hidden));
  ids.w2 = ps.Add(prefix + ".w2", KaimingUniform(rng, hidden, out));
  ids.b2 = ps.Add(prefix + ".b2", Eigen::MatrixXd::Zero(1, out));
  return ids;
}

Mlp2Ids FindMlp2(const ParamStore& ps, const std::string& prefix) {
  return {ps.Index(prefix + ".w1"), ps.Index(prefix + ".b1"), ps.Index(prefix + ".w2"), ps.Index(prefix + ".b2")};
}

std::string FieldPrefix(int layer) { return "field.l" + std::to_string(layer + 1); }
std::string ConvPrefix(size_t layer) { return "conv.l" + std::to_string(layer + 1); }

int FieldLayerInput(const ModelConfig& c, int layer) {
  if (layer == 0) return c.query_width();
  if (layer == 2) return c.field_width + c.query_width();
  return c.field_width;
}

Eigen::MatrixXd PlainMlp2(const ParamStore& ps, const Mlp2Ids& ids, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd h = (x * ps.value(ids.w1)).rowwise() + ps.value(ids.b1).row(0);
  h = h.cwiseMax(0.0);
  Eigen::MatrixXd out = h * ps.value(ids.w2);
  out.rowwise() += ps.value(ids.b2).row(0);
  return out;
}

}  // namespace

const char* ModalityName(int modality) { return kModalityNames[modality]; }

int ModelConfig::ModalityInputSize(int modality) const {
  switch (modality) {
    case kDepth: return rays_per_scan;
    case kMaterial: return num_materials + 3;
    case kAcoustic: return 3 * num_bands;
    default: return 2;
  }
}

void ModelConfig::Validate() const {
  Require(num_points >= 1 && rays_per_scan >= 1 && num_bands >= 1 && num_materials >= 1,
          "model context dimensions must be positive");
  Require(footprint_diagonal > 0.0, "footprint_diagonal must be positive");
  Require(rir_length >= 1 && sample_rate > 0, "rir_length and sample_rate must be positive");
  Require(latent >= 1 && encoder_width >= 1 && field_width >= 1, "model widths must be positive");
  Require(pe_frequencies >= 1, "pe_frequencies must be positive");
  Require(!conv_kernels.empty(), "conv stack needs at least one layer");
  for (int k : conv_kernels)
    Require(k >= 1 && (k - 1) * conv_dilation % 2 == 0, "conv kernels must allow symmetric padding");
  Require(conv_dilation >= 1, "conv dilation must be positive");
}

json ModelConfigToJson(const ModelConfig& c) {
  return {{"num_points", c.num_points},       {"rays_per_scan", c.rays_per_scan},
          {"num_bands", c.num_bands},         {"num_materials", c.num_materials},
          {"footprint_diagonal", c.footprint_diagonal},
          {"rir_length", c.rir_length},       {"sample_rate", c.sample_rate},
          {"latent", c.latent},               {"encoder_width", c.encoder_width},
          {"field_width", c.field_width},     {"pe_frequencies", c.pe_frequencies},
          {"conv_kernels", c.conv_kernels},   {"conv_dilation", c.conv_dilation},
          {"conv_slope", c.conv_slope},       {"use_context", c.use_context}};
}

ModelConfig ModelConfigFromJson(const json& j) {
  ModelConfig c;
  c.num_points = j.value("num_points", c.num_points);
  c.rays_per_scan = j.value("rays_per_scan", c.rays_per_scan);
  c.num_bands = j.value("num_bands", c.num_bands);
  c.num_materials = j.value("num_materials", c.num_materials);
  c.footprint_diagonal = j.value("footprint_diagonal", c.footprint_diagonal);
  c.rir_length = j.value("rir_length", c.rir_length);
  c.sample_rate = j.value("sample_rate", c.sample_rate);
  c.latent = j.value("latent", c.latent);
  c.encoder_width = j.value("encoder_width", c.encoder_width);
  c.field_width = j.value("field_width", c.field_width);
  c.pe_frequencies = j.value("pe_frequencies", c.pe_frequencies);
  if (j.contains("conv_kernels")) c.conv_kernels = j.at("conv_kernels").get<std::vector<int>>();
  c.conv_dilation = j.value("conv_dilation", c.conv_dilation);
  c.conv_slope = j.value("conv_slope", c.conv_slope);
  c.use_context = j.value("use_context", c.use_context);
  c.Validate();
  return c;
}

int ParamStore::Add(std::string name, Eigen::MatrixXd value) {
  Require(!index_.contains(name), "duplicate parameter block " + name);
  const int id = static_cast<int>(names_.size());
  index_.emplace(name, id);
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
  return id;
}

int ParamStore::Find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

int ParamStore::Index(const std::string& name) const {
  const int id = Find(name);
  if (id < 0) Fail(ErrorCode::kFormat, "missing parameter block " + name);
  return id;
}

std::vector<Eigen::MatrixXd*> ParamStore::Pointers() {
  std::vector<Eigen::MatrixXd*> out;
  for (auto& v : values_) out.push_back(&v);
  return out;
}

bool Model::IsConvBlock(size_t i) const { return params.name(i).rfind("conv.", 0) == 0; }

void Model::ResolveIds() {
  const auto& c = config;
  if (c.use_context) {
    for (int m = 0; m < kNumModalities; ++m)
      context_encoders[static_cast<size_t>(m)] = FindMlp2(params, std::string("ctx.") + kModalityNames[m]);
    context_constant = -1;
  } else {
    context_constant = params.Index("ctx.constant");
  }
  time_encoder = FindMlp2(params, "time");
  for (int l = 0; l < 4; ++l) {
    auto& ids = field_layers[static_cast<size_t>(l)];
    ids.w = params.Index(FieldPrefix(l) + ".w");
    ids.b = params.Index(FieldPrefix(l) + ".b");
    ids.cond = params.Index(FieldPrefix(l) + ".cond");
  }
  head_w = params.Index("field.head.w");
  head_b = params.Index("field.head.b");
  orientation_table = params.Index("emb.orientation");
  channel_table = params.Index("emb.channel");
  conv_w.clear();
  conv_b.clear();
  for (size_t l = 0; l < c.conv_kernels.size(); ++l) {
    conv_w.push_back(params.Index(ConvPrefix(l) + ".w"));
    conv_b.push_back(params.Index(ConvPrefix(l) + ".b"));
  }
}

Model InitModel(const ModelConfig& config, uint64_t seed) {
  config.Validate();
  Model model;
  model.config = config;
  auto& ps = model.params;
  Rng rng(seed);
  const int h = config.latent;
  if (config.use_context) {
    for (int m = 0; m < kNumModalities; ++m)
      AddMlp2(ps, rng, std::string("ctx.") + kModalityNames[m], config.ModalityInputSize(m), config.encoder_width, h);
  } else {
    ps.Add("ctx.constant", Gaussian(rng, config.query_width(), h, 0.1));
  }
  AddMlp2(ps, rng, "time", 2 * config.pe_frequencies, config.encoder_width, h);
  for (int l = 0; l < 4; ++l) {
    const int in = FieldLayerInput(config, l);
    ps.Add(FieldPrefix(l) + ".w", KaimingUniform(rng, in, config.field_width));
    ps.Add(FieldPrefix(l) + ".b", Eigen::MatrixXd::Zero(1, config.field_width));
    ps.Add(FieldPrefix(l) + ".cond", KaimingUniform(rng, h, in));
  }
  ps.Add("field.head.w", KaimingUniform(rng, config.field_width, 1));
  ps.Add("field.head.b", Eigen::MatrixXd::Zero(1, 1));
  ps.Add("emb.orientation", Gaussian(rng, 4, h, 0.1));
  ps.Add("emb.channel", Gaussian(rng, 2, h, 0.1));
  for (size_t l = 0; l < config.conv_kernels.size(); ++l) {
    const int k = config.conv_kernels[l];
    ps.Add(ConvPrefix(l) + ".w", Eigen::MatrixXd::Zero(2, 2 * k));
    ps.Add(ConvPrefix(l) + ".b", Eigen::MatrixXd::Zero(1, 2));
  }
  model.ResolveIds();
  InitConv(model, ConvInit::kIdentityWithNoise, seed ^ 0x9e3779b97f4a7c15ULL);
  return model;
}

void InitConv(Model& model, ConvInit mode, uint64_t seed) {
  Rng rng(seed);
  const size_t layers = model.conv_w.size();
  for (size_t l = 0; l < layers; ++l) {
    auto& w = model.params.value(static_cast<size_t>(model.conv_w[l]));
    auto& b = model.params.value(static_cast<size_t>(model.conv_b[l]));
    const int k = model.config.conv_kernels[l];
    w.setZero();
    b.setZero();
    // Hidden layers pass the signal through; the last layer starts at zero
    // so the residual refinement begins as a no-op.
    if (l + 1 < layers)
      for (int c = 0; c < 2; ++c) w(c, c * k + k / 2) = 1.0;
    if (mode == ConvInit::kIdentityWithNoise)
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) += 0.01 * rng.Normal();
  }
}

std::array<Eigen::MatrixXd, kNumModalities> ContextFeatures(const ModelConfig& config,
                                                            const std::vector<BoundaryContext>& contexts) {
  Require(static_cast<int>(contexts.size()) == config.num_points,
          "expected " + std::to_string(config.num_points) + " boundary contexts, got " + std::to_string(contexts.size()));
  const auto n = static_cast<Eigen::Index>(contexts.size());
  const double inv_diag = 1.0 / config.footprint_diagonal;
  std::array<Eigen::MatrixXd, kNumModalities> f;
  for (int m = 0; m < kNumModalities; ++m) f[static_cast<size_t>(m)].resize(n, config.ModalityInputSize(m));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& ctx = contexts[static_cast<size_t>(i)];
    Require(static_cast<int>(ctx.depth_scan.size()) == config.rays_per_scan, "depth scan size mismatch");
    Require(static_cast<int>(ctx.material_desc.size()) == config.num_materials + 3, "material descriptor size mismatch");
    Require(ctx.acoustic_coeffs.rows() == config.num_bands && ctx.acoustic_coeffs.cols() == 3,
            "acoustic coefficient shape mismatch");
    for (int k = 0; k < config.rays_per_scan; ++k) f[kDepth](i, k) = ctx.depth_scan[static_cast<size_t>(k)] * inv_diag;
    for (int k = 0; k < config.num_materials + 3; ++k) f[kMaterial](i, k) = ctx.material_desc[static_cast<size_t>(k)];
    for (int b = 0; b < config.num_bands; ++b)
      for (int k = 0; k < 3; ++k) f[kAcoustic](i, 3 * b + k) = ctx.acoustic_coeffs(b, k);
    f[kPosition].row(i) = ctx.position.transpose() * inv_diag;
    f[kEmitter].row(i) = ctx.emitter_disp.transpose() * inv_diag;
    f[kReceiver].row(i) = ctx.receiver_disp.transpose() * inv_diag;
  }
  return f;
}

Eigen::MatrixXd PositionalEncodingTable(int rir_length, int frequencies) {
  Eigen::MatrixXd table(rir_length, 2 * frequencies);
  for (int t = 0; t < rir_length; ++t) {
    const double t_norm = rir_length == 1 ? 0.0 : static_cast<double>(t) / (rir_length - 1);
    const auto enc = PositionalEncoding(t_norm, frequencies);
    for (int k = 0; k < 2 * frequencies; ++k) table(t, k) = enc[static_cast<size_t>(k)];
  }
  return table;
}

Var TapeParams::operator[](int block) {
  auto& v = vars_[static_cast<size_t>(block)];
  if (!v.valid()) v = tape_.LeafRef(params_.value(static_cast<size_t>(block)));
  return v;
}

Var BuildMlp2(Tape& tape, TapeParams& p, const Mlp2Ids& ids, Var x) {
  Var h = tape.Relu(tape.AddRowBroadcast(tape.MatMul(x, p[ids.w1]), p[ids.b1]));
  return tape.AddRowBroadcast(tape.MatMul(h, p[ids.w2]), p[ids.b2]);
}

Var BuildContextTensor(Tape& tape, TapeParams& p, const Model& model,
                       const std::array<Eigen::MatrixXd, kNumModalities>& features) {
  if (!model.config.use_context) return p[model.context_constant];
  std::vector<Var> parts;
  for (int m = 0; m < kNumModalities; ++m) {
    Var x = tape.Constant(features[static_cast<size_t>(m)]);
    parts.push_back(BuildMlp2(tape, p, model.context_encoders[static_cast<size_t>(m)], x));
  }
  return tape.InterleaveRows(parts);
}

Var BuildTimeVectors(Tape& tape, TapeParams& p, const Model& model) {
  Var pe = tape.Constant(PositionalEncodingTable(model.config.rir_length, model.config.pe_frequencies));
  return BuildMlp2(tape, p, model.time_encoder, pe);
}

Var BuildField(Tape& tape, TapeParams& p, const Model& model, Var context_tensor, Var time_vectors,
               int orientation_index) {
  Require(orientation_index >= 0 && orientation_index < 4, "orientation index out of range");
  const int len = static_cast<int>(tape.value(time_vectors).rows());
  Var query = tape.MatMulNT(time_vectors, context_tensor);  // T x N*6
  Var x_in = tape.TileRows(query, 2);                      // rows [0,T) left, [T,2T) right
  Var cond = tape.Add(tape.RowSelect(p[model.channel_table], {0, 1}),
                      tape.RowSelect(p[model.orientation_table], {orientation_index, orientation_index}));
  // (x + s P) W + b == x W + (s P W + b): the conditioning folds into one
  // shift row per channel block.
  Var x;
  for (int l = 0; l < 4; ++l) {
    const auto& ids = model.field_layers[static_cast<size_t>(l)];
    Var shift = tape.AddRowBroadcast(tape.MatMul(tape.MatMul(cond, p[ids.cond]), p[ids.w]), p[ids.b]);
    Var pre;
    if (l == 0)
      pre = tape.TileRows(tape.MatMul(query, p[ids.w]), 2);
    else
      pre = tape.MatMul(l == 2 ? tape.ConcatCols(x, x_in) : x, p[ids.w]);
    x = tape.AddBlockRowsRelu(pre, shift, len);
  }
  Var out = tape.AddRowBroadcast(tape.MatMul(x, p[model.head_w]), p[model.head_b]);
  return tape.Reshape(out, len, 2);
}

Var BuildConvStack(Tape& tape, TapeParams& p, const Model& model, Var rir) {
  const size_t layers = model.conv_w.size();
  Var x = rir;
  for (size_t l = 0; l < layers; ++l) {
    x = tape.Conv1d(x, p[model.conv_w[l]], p[model.conv_b[l]], model.config.conv_kernels[l], model.config.conv_dilation);
    if (l + 1 < layers) x = tape.LeakyRelu(x, model.config.conv_slope);
  }
  return x;
}

Var BuildTemporalRefine(Tape& tape, TapeParams& p, const Model& model, Var rir) {
  return tape.Add(rir, BuildConvStack(tape, p, model, rir));
}

ContextTensor EncodeContexts(const Model& model, const std::vector<BoundaryContext>& contexts) {
  ContextTensor out;
  out.num_points = model.config.num_points;
  if (!model.config.use_context) {
    out.values = model.params.value(static_cast<size_t>(model.context_constant));
    return out;
  }
  const auto features = ContextFeatures(model.config, contexts);
  std::array<Eigen::MatrixXd, kNumModalities> v;
  for (int m = 0; m < kNumModalities; ++m)
    v[static_cast<size_t>(m)] = PlainMlp2(model.params, model.context_encoders[static_cast<size_t>(m)], features[static_cast<size_t>(m)]);
  out.values.resize(out.num_points * kNumModalities, model.config.latent);
  for (int i = 0; i < out.num_points; ++i)
    for (int m = 0; m < kNumModalities; ++m) out.values.row(i * kNumModalities + m) = v[static_cast<size_t>(m)].row(i);
  return out;
}

Eigen::MatrixXd TimeVector(const Model& model, int t) {
  const int len = model.config.rir_length;
  Require(t >= 1 && t <= len, "time index must lie in [1, T]");
  const double t_norm = len == 1 ? 0.0 : static_cast<double>(t - 1) / (len - 1);
  const auto enc = PositionalEncoding(t_norm, model.config.pe_frequencies);
  const Eigen::MatrixXd pe = Eigen::Map<const Eigen::RowVectorXd>(enc.data(), static_cast<Eigen::Index>(enc.size()));
  return PlainMlp2(model.params, model.time_encoder, pe);
}

Eigen::MatrixXd TimeCondition(const Model& model, const ContextTensor& context, int t) {
  const Eigen::MatrixXd tvec = TimeVector(model, t);
  Require(context.values.cols() == tvec.cols(), "context latent size does not match the time vector");
  const Eigen::VectorXd flat = context.values * tvec.transpose();
  Eigen::MatrixXd out(context.num_points, kNumModalities);
  for (int i = 0; i < context.num_points; ++i)
    for (int m = 0; m < kNumModalities; ++m) out(i, m) = flat(i * kNumModalities + m);
  return out;
}

double FieldForward(const Model& model, const Eigen::RowVectorXd& query, int orientation_index, int channel) {
  Require(orientation_index >= 0 && orientation_index < 4, "orientation index out of range");
  Require(channel == 0 || channel == 1, "channel index must be 0 or 1");
  Require(query.size() == model.config.query_width(), "field query width mismatch");
  const auto& ps = model.params;
  const Eigen::RowVectorXd cond = ps.value(static_cast<size_t>(model.orientation_table)).row(orientation_index) +
                                  ps.value(static_cast<size_t>(model.channel_table)).row(channel);
  Eigen::RowVectorXd x = query;
  for (int l = 0; l < 4; ++l) {
    const auto& ids = model.field_layers[static_cast<size_t>(l)];
    if (l == 2) {
      Eigen::RowVectorXd cat(x.size() + query.size());
      cat << x, query;
      x = cat;
    }
    x += cond * ps.value(static_cast<size_t>(ids.cond));
    x = (x * ps.value(static_cast<size_t>(ids.w)) + ps.value(static_cast<size_t>(ids.b))).cwiseMax(0.0);
  }
  return (x * ps.value(static_cast<size_t>(model.head_w)))(0, 0) + ps.value(static_cast<size_t>(model.head_b))(0, 0);
}

Rir RenderRir(const Model& model, const Query& query, const std::vector<BoundaryContext>& contexts, bool refine) {
  Tape tape;
  TapeParams p(tape, model.params);
  std::array<Eigen::MatrixXd, kNumModalities> features;
  if (model.config.use_context) features = ContextFeatures(model.config, contexts);
  Var ctx = BuildContextTensor(tape, p, model, features);
  Var tvec = BuildTimeVectors(tape, p, model);
  Var out = BuildField(tape, p, model, ctx, tvec, query.orientation_index());
  if (refine) out = BuildTemporalRefine(tape, p, model, out);
  Rir rir;
  rir.samples = tape.value(out);
  rir.sample_rate = model.config.sample_rate;
  return rir;
}

Rir RenderRirSequential(const Model& model, const Query& query, const std::vector<BoundaryContext>& contexts) {
  const ContextTensor ctx = EncodeContexts(model, contexts);
  const int len = model.config.rir_length;
  Rir rir;
  rir.sample_rate = model.config.sample_rate;
  rir.samples.resize(len, 2);
  for (int t = 1; t <= len; ++t) {
    const Eigen::MatrixXd ct = TimeCondition(model, ctx, t);
    Eigen::RowVectorXd flat(ct.size());
    for (Eigen::Index i = 0; i < ct.rows(); ++i)
      for (Eigen::Index m = 0; m < ct.cols(); ++m) flat(i * ct.cols() + m) = ct(i, m);
    for (int c = 0; c < 2; ++c) rir.samples(t - 1, c) = FieldForward(model, flat, query.orientation_index(), c);
  }
  return rir;
}

Rir ConvStack(const Model& model, const Rir& rir) {
  Tape tape;
  TapeParams p(tape, model.params);
  Var out = BuildConvStack(tape, p, model, tape.Constant(rir.samples));
  return Rir{tape.value(out), rir.sample_rate};
}

Rir TemporalRefine(const Model& model, const Rir& rir) {
  Require(rir.samples.allFinite(), "temporal refine input must be finite");
  Tape tape;
  TapeParams p(tape, model.params);
  Var out = BuildTemporalRefine(tape, p, model, tape.Constant(rir.samples));
  return Rir{tape.value(out), rir.sample_rate};
}

}  // namespace nacf
