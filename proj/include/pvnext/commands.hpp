#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pvnext/dataio.hpp"
#include "pvnext/dense.hpp"
#include "pvnext/model.hpp"

namespace pvnext {

// Seeded stratified 50/50 split; per class, the shuffled first half trains.
struct DataSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

DataSplit stratified_split(const PcvDataset& dataset, std::uint64_t seed);

struct EvalReport {
  double accuracy = 0.0;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  std::vector<std::size_t> indices;                 // dataset indices evaluated
  std::vector<std::size_t> predicted;               // argmax label per index
};

// Runs inference over the given dataset indices; occlude_ratio > 0 applies
// drop_local (seeded per video as occlude_seed + index) before inference.
EvalReport evaluate_videos(const PcvDataset& dataset, const std::vector<std::size_t>& indices,
                           const ModelConfig& cfg, const ModelParams& params, std::uint64_t seed,
                           double occlude_ratio = 0.0, std::uint64_t occlude_seed = 0);

struct SynthOptions {
  SyntheticSpec spec;
  std::string out_path;
};

struct SynthResult {
  std::size_t num_videos = 0;
  std::size_t file_bytes = 0;
};

SynthResult cmd_synth(const SynthOptions& opt);

struct TrainOptions {
  std::string data_path;
  std::string checkpoint_path;
  std::string csv_path;
  std::string preset = "micro";
  std::size_t epochs = 30;
  std::size_t batch_size = 4;
  std::uint64_t seed = 0;
  bool imitator_enabled = true;
  int motion_sign = +1;
  std::size_t imitator_k = 3;
  double base_lr = 0.01;
  double momentum = 0.9;
};

struct TrainResult {
  ModelConfig cfg;
  double final_train_loss = 0.0;
  double final_test_accuracy = 0.0;
};

TrainResult cmd_train(const TrainOptions& opt);

struct EvalOptions {
  std::string data_path;
  std::string checkpoint_path;
  std::string csv_path;  // optional; empty skips the confusion CSV
  std::string preset = "micro";
  std::uint64_t seed = 0;  // split seed; must match training to reuse its split
  bool imitator_enabled = true;
  int motion_sign = +1;
  std::size_t imitator_k = 3;
  double occlude_ratio = 0.0;
  std::uint64_t occlude_seed = 0;
};

EvalReport cmd_eval(const EvalOptions& opt);

struct ImitatorEvalOptions {
  std::string data_path;
  std::string csv_path;  // optional
  std::string preset = "micro";
  std::size_t imitator_k = 3;
  int motion_sign = +1;
  std::uint64_t seed = 0;
};

struct ImitatorEvalResult {
  double mean_chamfer_advected = 0.0;
  double mean_chamfer_baseline = 0.0;
  std::size_t rows = 0;
};

ImitatorEvalResult cmd_imitator_eval(const ImitatorEvalOptions& opt);

struct BenchOptions {
  std::string csv_path;  // optional
  std::string pipeline = "both";  // onestep | dense | both
  std::size_t delta_t = 1;
  std::size_t n_points = 2048;
  std::size_t t_frames = 16;
  std::string preset = "msr";
  std::size_t stage_index = 0;
  std::size_t warmups = 3;
  std::size_t iters = 10;
  int threads = 1;
  std::uint64_t seed = 0;
  bool zero_motion = false;  // forces zero motion on the one-step side
};

struct BenchRow {
  std::string pipeline;
  std::size_t delta_t = 0;
  std::size_t n_points = 0;
  std::size_t t_frames = 0;
  std::size_t m_out = 0;
  std::size_t k = 0;
  int threads = 1;
  std::size_t warmups = 0;
  std::size_t iters = 0;
  std::uint64_t wall_ns_median = 0;
  std::uint64_t ball_queries = 0;
  std::uint64_t member_embeddings = 0;
  std::uint64_t multiply_adds_measured = 0;
  std::uint64_t distance_evals = 0;
  std::uint64_t macs_analytic = 0;
  std::uint64_t params = 0;
  std::uint64_t peak_bytes_estimate = 0;
  std::uint64_t checksum = 0;  // FNV-1a over output feature bits
};

std::vector<BenchRow> cmd_bench(const BenchOptions& opt);

}  // namespace pvnext
