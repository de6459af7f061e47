// Copyright 2026 The NACF Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// nacf: dataset generation, training, rendering, evaluation and plot export.

#include <malloc.h>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nacf/nacf.h"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct RuntimeFailure {
  std::string message;
};

void Check(nacf_status s) {
  if (s != NACF_OK) throw RuntimeFailure{std::string(nacf_status_name(s)) + ": " + nacf_last_error()};
}

std::optional<std::string> ReadText(const std::string& path) {
  if (path.empty()) return std::nullopt;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeFailure{"io: cannot read " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* OrNull(const std::optional<std::string>& s) { return s ? s->c_str() : nullptr; }

class Dataset {
 public:
  explicit Dataset(const std::string& dir) { Check(nacf_dataset_open(dir.c_str(), &ptr_)); }
  ~Dataset() { nacf_dataset_free(ptr_); }
  Dataset(const Dataset&) = delete;
  Dataset& operator=(const Dataset&) = delete;
  const nacf_dataset* get() const { return ptr_; }

 private:
  nacf_dataset* ptr_ = nullptr;
};

class Model {
 public:
  explicit Model(const std::string& path) { Check(nacf_model_load(path.c_str(), &ptr_)); }
  ~Model() { nacf_model_free(ptr_); }
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  const nacf_model* get() const { return ptr_; }

 private:
  nacf_model* ptr_ = nullptr;
};

}  // namespace

int main(int argc, char** argv) {
  // Keep large temporaries on the heap instead of fresh mmaps per allocation.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);

  CLI::App app{"Neural acoustic context field: data, training, rendering and evaluation"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", std::string(nacf_version()));

  int threads = 0;
  auto add_threads = [&](CLI::App* sub) {
    sub->add_option("--threads", threads, "Worker threads (0 = all hardware threads)")->check(CLI::NonNegativeNumber);
  };

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Simulate the synthetic RIR dataset");
  std::string gen_config, gen_out;
  uint64_t gen_seed = 0;
  gen->add_option("--config", gen_config, "Dataset config JSON (defaults when omitted)");
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--seed", gen_seed, "Split seed")->required();
  add_threads(gen);

  // train
  auto* train = app.add_subcommand("train", "Train the main or refine stage");
  std::string stage = "main", train_config, train_data, train_out, train_from;
  std::optional<int64_t> train_seed;
  train->add_option("--stage", stage, "Curriculum stage")->check(CLI::IsMember({"main", "refine"}));
  train->add_option("--config", train_config, "Training config JSON (defaults when omitted)");
  train->add_option("--data", train_data, "Dataset directory")->required();
  train->add_option("--out", train_out, "Checkpoint directory")->required();
  train->add_option("--from", train_from, "Main-stage checkpoint for --stage refine (default <out>/best)");
  train->add_option("--seed", train_seed, "Overrides the config seed")->check(CLI::NonNegativeNumber);

  // render
  auto* render = app.add_subcommand("render", "Render one binaural RIR to a WAV file");
  std::string render_ckpt, render_data, render_out;
  std::optional<size_t> render_index;
  std::vector<double> render_emitter, render_receiver;
  double render_orientation = 0.0;
  render->add_option("--ckpt", render_ckpt, "Checkpoint file")->required();
  render->add_option("--data", render_data, "Dataset directory (room and contexts)")->required();
  render->add_option("--out", render_out, "Output WAV path")->required();
  auto* opt_index = render->add_option("--index", render_index, "Dataset entry to render");
  auto* opt_emitter = render->add_option("--emitter", render_emitter, "Emitter x,y in meters")->expected(2)->delimiter(',');
  auto* opt_receiver =
      render->add_option("--receiver", render_receiver, "Receiver x,y in meters")->expected(2)->delimiter(',');
  auto* opt_orient = render->add_option("--orientation", render_orientation, "Receiver orientation in degrees");
  opt_emitter->needs(opt_receiver);
  opt_receiver->needs(opt_emitter);
  opt_index->excludes(opt_emitter)->excludes(opt_receiver)->excludes(opt_orient);

  // eval
  auto* eval = app.add_subcommand("eval", "Score a checkpoint on a dataset split");
  std::string eval_ckpt, eval_data, eval_report, eval_split = "test";
  eval->add_option("--ckpt", eval_ckpt, "Checkpoint file")->required();
  eval->add_option("--data", eval_data, "Dataset directory")->required();
  eval->add_option("--report", eval_report, "Report JSON path")->required();
  eval->add_option("--split", eval_split, "Split to score")->check(CLI::IsMember({"train", "test"}));
  add_threads(eval);

  // fewshot
  auto* fewshot = app.add_subcommand("fewshot", "Train on nested fractions of the training split");
  std::string fs_config, fs_data, fs_report;
  std::vector<double> fs_fractions{0.05, 0.1, 0.2, 0.4, 0.6};
  std::vector<uint64_t> fs_seeds{0, 1, 2};
  fewshot->add_option("--config", fs_config, "Training config JSON (defaults when omitted)");
  fewshot->add_option("--data", fs_data, "Dataset directory")->required();
  fewshot->add_option("--report", fs_report, "Report JSON path")->required();
  fewshot->add_option("--fractions", fs_fractions, "Training fractions")->delimiter(',')->capture_default_str();
  fewshot->add_option("--seeds", fs_seeds, "Seeds, one sweep each")->delimiter(',')->capture_default_str();

  // plot
  auto* plot = app.add_subcommand("plot", "Export waveform and decay-curve data per entry");
  std::string plot_ckpt, plot_data, plot_out;
  std::vector<size_t> plot_indices;
  plot->add_option("--ckpt", plot_ckpt, "Checkpoint file")->required();
  plot->add_option("--data", plot_data, "Dataset directory")->required();
  plot->add_option("--indices", plot_indices, "Dataset entries")->required()->delimiter(',');
  plot->add_option("--out", plot_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*gen) {
      const auto cfg = ReadText(gen_config);
      Check(nacf_generate_dataset(OrNull(cfg), gen_out.c_str(), gen_seed, threads));
    } else if (*train) {
      const auto cfg = ReadText(train_config);
      Dataset ds(train_data);
      const int64_t seed = train_seed.value_or(-1);
      if (stage == "main") {
        Check(nacf_train_main(ds.get(), OrNull(cfg), seed, train_out.c_str()));
      } else {
        const std::string from = train_from.empty() ? train_out + "/best" : train_from;
        Check(nacf_train_refine(ds.get(), OrNull(cfg), seed, from.c_str(), train_out.c_str()));
      }
    } else if (*render) {
      if (!render_index && render_emitter.empty()) {
        std::cerr << "error: render needs --index or --emitter/--receiver\n\n" << render->help();
        return kExitUsage;
      }
      Model model(render_ckpt);
      Dataset ds(render_data);
      size_t length = 0;
      int rate = 0;
      Check(nacf_model_rir_length(model.get(), &length));
      Check(nacf_model_sample_rate(model.get(), &rate));
      std::vector<double> buf(2 * length);
      if (render_index)
        Check(nacf_render_entry(model.get(), ds.get(), *render_index, buf.data(), buf.size()));
      else
        Check(nacf_render_query(model.get(), ds.get(), render_emitter[0], render_emitter[1], render_receiver[0],
                                render_receiver[1], render_orientation, buf.data(), buf.size()));
      Check(nacf_write_wav(render_out.c_str(), buf.data(), length, rate));
    } else if (*eval) {
      Model model(eval_ckpt);
      Dataset ds(eval_data);
      Check(nacf_evaluate(model.get(), ds.get(), eval_split == "test" ? NACF_SPLIT_TEST : NACF_SPLIT_TRAIN, threads,
                          eval_report.c_str()));
    } else if (*fewshot) {
      const auto cfg = ReadText(fs_config);
      Dataset ds(fs_data);
      Check(nacf_fewshot(ds.get(), OrNull(cfg), fs_fractions.data(), fs_fractions.size(), fs_seeds.data(),
                         fs_seeds.size(), fs_report.c_str()));
    } else if (*plot) {
      Model model(plot_ckpt);
      Dataset ds(plot_data);
      Check(nacf_export_plots(model.get(), ds.get(), plot_indices.data(), plot_indices.size(), plot_out.c_str()));
    }
  } catch (const RuntimeFailure& f) {
    std::cerr << "error: " << f.message << "\n";
    return kExitRuntime;
  }
  return 0;
}
