// Copyright 2026 The NACF Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsp.hpp"
#include "room.hpp"
#include "tape.hpp"

namespace nacf {

// Context modalities in their fixed fusion order.
enum Modality : int { kDepth = 0, kMaterial, kAcoustic, kPosition, kEmitter, kReceiver, kNumModalities };
const char* ModalityName(int modality);

struct ModelConfig {
  int num_points = 4;
  int rays_per_scan = 32;
  int num_bands = 3;
  int num_materials = 3;
  double footprint_diagonal = 6.4031242374328485;  // normalizes positions and depths
  int rir_length = 4096;
  int sample_rate = 16000;

  int latent = 256;          // h
  int encoder_width = 256;   // hidden width of every 2-layer projection
  int field_width = 256;
  int pe_frequencies = 10;   // L
  std::vector<int> conv_kernels{3, 5, 7};
  int conv_dilation = 2;
  double conv_slope = 0.2;
  bool use_context = true;

  int query_width() const { return num_points * kNumModalities; }
  int ModalityInputSize(int modality) const;
  void Validate() const;
};

nlohmann::json ModelConfigToJson(const ModelConfig& c);
ModelConfig ModelConfigFromJson(const nlohmann::json& j);

// Named, ordered parameter blocks. Order is creation order and is what the
// checkpoint writes.
class ParamStore {
 public:
  int Add(std::string name, Eigen::MatrixXd value);
  int Find(const std::string& name) const;  // -1 if absent
  int Index(const std::string& name) const;  // throws if absent
  size_t size() const { return names_.size(); }
  const std::string& name(size_t i) const { return names_[i]; }
  Eigen::MatrixXd& value(size_t i) { return values_[i]; }
  const Eigen::MatrixXd& value(size_t i) const { return values_[i]; }
  std::vector<Eigen::MatrixXd*> Pointers();

 private:
  std::vector<std::string> names_;
  std::vector<Eigen::MatrixXd> values_;
  std::map<std::string, int> index_;
};

struct Mlp2Ids {
  int w1 = -1, b1 = -1, w2 = -1, b2 = -1;
};

struct FieldLayerIds {
  int w = -1, b = -1, cond = -1;
};

// A model: configuration plus parameter blocks and their resolved indices.
struct Model {
  ModelConfig config;
  ParamStore params;

  std::array<Mlp2Ids, kNumModalities> context_encoders;
  int context_constant = -1;  // only without context
  Mlp2Ids time_encoder;
  std::array<FieldLayerIds, 4> field_layers;
  int head_w = -1, head_b = -1;
  int orientation_table = -1, channel_table = -1;
  std::vector<int> conv_w, conv_b;

  bool IsConvBlock(size_t i) const;
  // Re-resolves block indices after params were loaded.
  void ResolveIds();
};

enum class ConvInit { kIdentityWithNoise, kExactIdentity };

// Kaiming-uniform weights, zero biases, 0.1 * N(0, 1) embeddings, conv
// stack near identity.
Model InitModel(const ModelConfig& config, uint64_t seed);
void InitConv(Model& model, ConvInit mode, uint64_t seed);

// Raw context features normalized and stacked per modality: N x input_size.
std::array<Eigen::MatrixXd, kNumModalities> ContextFeatures(const ModelConfig& config,
                                                            const std::vector<BoundaryContext>& contexts);

// Rows are gamma((t - 1) / (T - 1)) for t = 1..T.
Eigen::MatrixXd PositionalEncodingTable(int rir_length, int frequencies);

// Binds parameter blocks as leaves on a tape, lazily.
class TapeParams {
 public:
  TapeParams(Tape& tape, const ParamStore& params) : tape_(tape), params_(params), vars_(params.size()) {}
  Var operator[](int block);
  const std::vector<Var>& vars() const { return vars_; }

 private:
  Tape& tape_;
  const ParamStore& params_;
  std::vector<Var> vars_;
};

// --- graph builders (differentiable) ---
Var BuildMlp2(Tape& tape, TapeParams& p, const Mlp2Ids& ids, Var x);
// N*6 x h fused context, rows point-major / modality-minor.
Var BuildContextTensor(Tape& tape, TapeParams& p, const Model& model,
                       const std::array<Eigen::MatrixXd, kNumModalities>& features);
Var BuildTimeVectors(Tape& tape, TapeParams& p, const Model& model);
// Field over all T rows and both channels; returns T x 2.
Var BuildField(Tape& tape, TapeParams& p, const Model& model, Var context_tensor, Var time_vectors,
               int orientation_index);
// g(O): the dilated conv stack alone.
Var BuildConvStack(Tape& tape, TapeParams& p, const Model& model, Var rir);
// O* = O + g(O).
Var BuildTemporalRefine(Tape& tape, TapeParams& p, const Model& model, Var rir);

// --- plain forward passes ---
struct ContextTensor {
  int num_points = 0;
  Eigen::MatrixXd values;  // (N * 6) x h
};

ContextTensor EncodeContexts(const Model& model, const std::vector<BoundaryContext>& contexts);
Eigen::MatrixXd TimeVector(const Model& model, int t);  // 1 x h, t in [1, T]
// C_t(i, j) = C(i, j, :) . t_vec; N x 6.
Eigen::MatrixXd TimeCondition(const Model& model, const ContextTensor& context, int t);
// Single (t, c) field evaluation from a flattened C_t row.
double FieldForward(const Model& model, const Eigen::RowVectorXd& query, int orientation_index, int channel);

// Batched render (single tape pass over all t); `refine` applies the conv stack.
Rir RenderRir(const Model& model, const Query& query, const std::vector<BoundaryContext>& contexts, bool refine);
// Sample-by-sample render through FieldForward.
Rir RenderRirSequential(const Model& model, const Query& query, const std::vector<BoundaryContext>& contexts);
Rir TemporalRefine(const Model& model, const Rir& rir);
Rir ConvStack(const Model& model, const Rir& rir);

}  // namespace nacf
