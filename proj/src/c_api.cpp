// Copyright 2026 The NACF Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "nacf/nacf.h"

#include <cmath>
#include <exception>
#include <filesystem>
#include <string>

#include "checkpoint.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "plots.hpp"
#include "trainer.hpp"
#include "wav.hpp"

struct nacf_dataset {
  nacf::Dataset data;
};

struct nacf_model {
  nacf::Model model;
  bool refine = false;
};

namespace {

thread_local std::string g_last_error;

nacf_status Code(nacf::ErrorCode c) { return static_cast<nacf_status>(static_cast<int>(c)); }

template <typename Fn>
nacf_status Guard(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return NACF_OK;
  } catch (const nacf::Error& e) {
    g_last_error = e.what();
    return Code(e.code());
  } catch (const nlohmann::json::exception& e) {
    g_last_error = std::string("malformed JSON: ") + e.what();
    return NACF_ERR_FORMAT;
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return NACF_ERR_IO;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return NACF_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return NACF_ERR_INTERNAL;
  }
}

void NotNull(const void* p, const char* what) {
  nacf::Require(p != nullptr, std::string(what) + " must not be null");
}

nacf::TrainConfig ParseTrainConfig(const char* config_json, int64_t seed_override) {
  nacf::TrainConfig c = config_json ? nacf::TrainConfigFromJson(nlohmann::json::parse(config_json)) : nacf::TrainConfig{};
  if (seed_override >= 0) c.seed = static_cast<uint64_t>(seed_override);
  return c;
}

void CopyOut(const nacf::Rir& rir, double* out, size_t capacity) {
  NotNull(out, "output buffer");
  const auto n = static_cast<size_t>(rir.length());
  nacf::Require(capacity >= 2 * n, "output buffer holds fewer than 2 * rir_length values");
  for (size_t t = 0; t < n; ++t) {
    out[2 * t] = rir.samples(static_cast<Eigen::Index>(t), 0);
    out[2 * t + 1] = rir.samples(static_cast<Eigen::Index>(t), 1);
  }
}

}  // namespace

extern "C" {

const char* nacf_version(void) { return "1.0.0"; }

const char* nacf_last_error(void) { return g_last_error.c_str(); }

const char* nacf_status_name(nacf_status status) {
  switch (status) {
    case NACF_OK: return "ok";
    case NACF_ERR_INVALID_ARGUMENT: return "invalid-argument";
    case NACF_ERR_DEGENERATE_GEOMETRY: return "degenerate-geometry";
    case NACF_ERR_INSUFFICIENT_DECAY: return "insufficient-decay";
    case NACF_ERR_DEGENERATE: return "degenerate";
    case NACF_ERR_NON_FINITE: return "non-finite";
    case NACF_ERR_IO: return "io";
    case NACF_ERR_FORMAT: return "format";
    case NACF_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

nacf_status nacf_generate_dataset(const char* config_json, const char* out_dir, uint64_t seed, int threads) {
  return Guard([&] {
    NotNull(out_dir, "out_dir");
    const nacf::DatasetConfig config =
        config_json ? nacf::DatasetConfigFromJson(nlohmann::json::parse(config_json)) : nacf::DatasetConfig{};
    nacf::GenerateDataset(config, out_dir, seed, threads);
  });
}

nacf_status nacf_dataset_open(const char* dir, nacf_dataset** out) {
  return Guard([&] {
    NotNull(dir, "dir");
    NotNull(out, "out");
    *out = nullptr;
    auto ds = std::make_unique<nacf_dataset>();
    ds->data = nacf::LoadDataset(dir);
    *out = ds.release();
  });
}

void nacf_dataset_free(nacf_dataset* dataset) { delete dataset; }

nacf_status nacf_dataset_size(const nacf_dataset* dataset, size_t* out) {
  return Guard([&] {
    NotNull(dataset, "dataset");
    NotNull(out, "out");
    *out = dataset->data.entries.size();
  });
}

nacf_status nacf_dataset_split_size(const nacf_dataset* dataset, nacf_split split, size_t* out) {
  return Guard([&] {
    NotNull(dataset, "dataset");
    NotNull(out, "out");
    *out = dataset->data.Indices(split == NACF_SPLIT_TEST ? nacf::Split::kTest : nacf::Split::kTrain).size();
  });
}

nacf_status nacf_train_main(const nacf_dataset* dataset, const char* config_json, int64_t seed_override,
                            const char* out_dir) {
  return Guard([&] {
    NotNull(dataset, "dataset");
    NotNull(out_dir, "out_dir");
    nacf::TrainConfig c = ParseTrainConfig(config_json, seed_override);
    nacf::Require(c.stage == nacf::Stage::kMain, "config stage is 'refine' but the main stage was requested");
    nacf::TrainStageMain(dataset->data, c, out_dir);
  });
}

nacf_status nacf_train_refine(const nacf_dataset* dataset, const char* config_json, int64_t seed_override,
                              const char* main_checkpoint, const char* out_dir) {
  return Guard([&] {
    NotNull(dataset, "dataset");
    NotNull(out_dir, "out_dir");
    nacf::Require(main_checkpoint != nullptr && std::filesystem::is_regular_file(main_checkpoint),
                  "refine stage needs an existing main-stage checkpoint");
    nacf::TrainConfig c = ParseTrainConfig(config_json, seed_override);
    c.stage = nacf::Stage::kRefine;
    nacf::Checkpoint ckpt = nacf::LoadCheckpoint(main_checkpoint);
    nacf::Require(ckpt.meta.value("stage", "") == "main", "refine stage must start from a main-stage checkpoint");
    nacf::TrainStageRefine(dataset->data, c, ckpt.model, out_dir);
  });
}

nacf_status nacf_model_load(const char* checkpoint, nacf_model** out) {
  return Guard([&] {
    NotNull(checkpoint, "checkpoint");
    NotNull(out, "out");
    *out = nullptr;
    nacf::Checkpoint ckpt = nacf::LoadCheckpoint(checkpoint);
    auto m = std::make_unique<nacf_model>();
    m->model = std::move(ckpt.model);
    m->refine = ckpt.meta.value("temporal_trained", false);
    *out = m.release();
  });
}

void nacf_model_free(nacf_model* model) { delete model; }

nacf_status nacf_model_rir_length(const nacf_model* model, size_t* out) {
  return Guard([&] {
    NotNull(model, "model");
    NotNull(out, "out");
    *out = static_cast<size_t>(model->model.config.rir_length);
  });
}

nacf_status nacf_model_sample_rate(const nacf_model* model, int* out) {
  return Guard([&] {
    NotNull(model, "model");
    NotNull(out, "out");
    *out = model->model.config.sample_rate;
  });
}

nacf_status nacf_render_entry(const nacf_model* model, const nacf_dataset* dataset, size_t index, double* out,
                              size_t capacity) {
  return Guard([&] {
    NotNull(model, "model");
    NotNull(dataset, "dataset");
    nacf::Require(index < dataset->data.entries.size(), "entry index " + std::to_string(index) + " is out of range");
    const auto& e = dataset->data.entries[index];
    CopyOut(nacf::RenderRir(model->model, e.query, e.contexts, model->refine), out, capacity);
  });
}

nacf_status nacf_render_query(const nacf_model* model, const nacf_dataset* dataset, double emitter_x,
                              double emitter_y, double receiver_x, double receiver_y, double orientation_deg,
                              double* out, size_t capacity) {
  return Guard([&] {
    NotNull(model, "model");
    NotNull(dataset, "dataset");
    nacf::Require(std::isfinite(orientation_deg) && orientation_deg == std::round(orientation_deg),
                  "orientation must be a whole number of degrees");
    const auto& cfg = dataset->data.config;
    nacf::Query q;
    q.emitter = nacf::Vec2(emitter_x, emitter_y);
    q.receiver = nacf::Vec2(receiver_x, receiver_y);
    q.orientation_deg = static_cast<int>(orientation_deg);
    q.z_height = cfg.z_height;
    q.Validate(cfg.room);
    const auto contexts = nacf::ExtractContexts(cfg.room, q, cfg.num_points, cfg.rays_per_scan);
    CopyOut(nacf::RenderRir(model->model, q, contexts, model->refine), out, capacity);
  });
}

nacf_status nacf_write_wav(const char* path, const double* samples, size_t length, int sample_rate) {
  return Guard([&] {
    NotNull(path, "path");
    NotNull(samples, "samples");
    nacf::Rir rir;
    rir.sample_rate = sample_rate;
    rir.samples.resize(static_cast<Eigen::Index>(length), 2);
    for (size_t t = 0; t < length; ++t) {
      rir.samples(static_cast<Eigen::Index>(t), 0) = samples[2 * t];
      rir.samples(static_cast<Eigen::Index>(t), 1) = samples[2 * t + 1];
    }
    nacf::WriteWav(path, rir);
  });
}

nacf_status nacf_evaluate(const nacf_model* model, const nacf_dataset* dataset, nacf_split split, int threads,
                          const char* report_path) {
  return Guard([&] {
    NotNull(model, "model");
    NotNull(dataset, "dataset");
    NotNull(report_path, "report_path");
    const auto report =
        nacf::EvaluateModel(model->model, dataset->data, split == NACF_SPLIT_TEST ? nacf::Split::kTest : nacf::Split::kTrain,
                            model->refine, threads);
    nacf::WriteJsonFile(report_path, nacf::ReportToJson(report));
  });
}

nacf_status nacf_fewshot(const nacf_dataset* dataset, const char* config_json, const double* fractions,
                         size_t num_fractions, const uint64_t* seeds, size_t num_seeds, const char* report_path) {
  return Guard([&] {
    NotNull(dataset, "dataset");
    NotNull(fractions, "fractions");
    NotNull(seeds, "seeds");
    NotNull(report_path, "report_path");
    const nacf::TrainConfig c = ParseTrainConfig(config_json, -1);
    const auto points = nacf::RunFewShot(dataset->data, c, std::vector<double>(fractions, fractions + num_fractions),
                                         std::vector<uint64_t>(seeds, seeds + num_seeds));
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& p : points) {
      nlohmann::json m = nacf::ReportToJson(p.metrics);
      m.erase("pairs");
      runs.push_back({{"fraction", p.fraction}, {"seed", p.seed}, {"train_items", p.train_items}, {"metrics", m}});
    }
    nacf::WriteJsonFile(report_path, {{"train_config", nacf::TrainConfigToJson(c)}, {"runs", runs}});
  });
}

nacf_status nacf_export_plots(const nacf_model* model, const nacf_dataset* dataset, const size_t* indices,
                              size_t num_indices, const char* out_dir) {
  return Guard([&] {
    NotNull(model, "model");
    NotNull(dataset, "dataset");
    NotNull(indices, "indices");
    NotNull(out_dir, "out_dir");
    std::vector<int> idx;
    for (size_t i = 0; i < num_indices; ++i) {
      nacf::Require(indices[i] < dataset->data.entries.size(),
                    "plot index " + std::to_string(indices[i]) + " is out of range");
      idx.push_back(static_cast<int>(indices[i]));
    }
    nacf::ExportPlots(model->model, dataset->data, idx, model->refine, out_dir);
  });
}

}  // extern "C"
