#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pvnext/digest.hpp"
#include "pvnext/motion.hpp"
#include "pvnext/nn.hpp"
#include "pvnext/tensor.hpp"

namespace pvnext {

struct StageConfig {
  std::vector<std::size_t> mlp1;  // per-member widths, applied before pooling
  std::vector<std::size_t> mlp2;  // post-pool widths; may be empty
  std::size_t nsamples = 1;       // K group members
  std::size_t spatial_stride = 1;
  double radius = 0.1;
};

struct ModelConfig {
  std::vector<StageConfig> stages;
  std::size_t num_classes = 2;
  std::size_t imitator_k = 3;
  bool imitator_enabled = true;
  int motion_sign = +1;
  std::vector<std::size_t> head_hidden = {256};
};

ModelConfig make_msr_config(std::size_t num_classes);
ModelConfig make_ntu_config(std::size_t num_classes);
ModelConfig make_micro_config(std::size_t num_classes);
ModelConfig config_for_preset(const std::string& preset, std::size_t num_classes);

std::string config_canonical_string(const ModelConfig& cfg);
Sha256Digest config_digest(const ModelConfig& cfg);

struct StageParams {
  MlpBlock mlp1;
  MlpBlock mlp2;  // layers empty when the stage has no second MLP
};

struct ModelParams {
  std::vector<StageParams> stages;
  MlpBlock head;
  // flat registry in checkpoint order
  std::vector<std::pair<std::string, TensorRef>> named;

  void zero_grads();
};

ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed);

// What flows between stages: anchor coordinates plus per-frame features.
// Raw video input has coordinates only (feats empty).
struct StageData {
  std::vector<PointSet> coords;  // [T][M]
  std::vector<TensorRef> feats;  // T tensors of [M x C]; empty when C == 0

  std::size_t num_frames() const { return coords.size(); }
  std::size_t points_per_frame() const { return coords.empty() ? 0 : coords.front().size(); }
  std::size_t feat_width() const { return feats.empty() ? 0 : feats.front()->shape[1]; }
};

StageData stage_data_from_video(const PointCloudVideo& video);

// Group rows before/after the motion shift, frame-major; one entry per stage.
struct StageTraceEntry {
  std::vector<Vec3> h;
  std::vector<Vec3> h_prime;
};

struct StageTrace {
  std::vector<StageTraceEntry> stages;
};

struct ExecOptions {
  bool force_zero_motion = false;  // keeps the imitator pass but zeroes its output
  int parallel_frames = 1;         // worker threads for per-frame encoding
  StageTrace* trace = nullptr;     // only valid with parallel_frames == 1
};

// Eq-style virtual-frame shift: row (i*k + j) of h gets motion[i] added.
std::vector<Vec3> synthesize_virtual_frame(const std::vector<Vec3>& h, std::size_t k,
                                           const std::vector<Vec3>& motion);

// Member matrix [M*K x (3 + C_in)] -> mlp1 -> max over K -> [M x C1].
// Shared by the one-step and dense paths so matched configs agree bit-compatibly.
TensorRef encode_group_members(const std::vector<Vec3>& member_rel, const TensorRef& frame_feats,
                               const std::vector<std::size_t>& flat_indices, std::size_t m,
                               std::size_t k, const MlpBlock& mlp1);

// Single query per anchor into its own frame, then virtual-frame shift,
// per-member MLP, member pooling, and the optional post-pool MLP.
TensorRef one_step_encode(const PointSet& frame_coords, const TensorRef& frame_feats,
                          const std::vector<Vec3>& anchor_coords, const std::vector<Vec3>& motion,
                          const StageConfig& cfg, const StageParams& params,
                          StageTraceEntry* trace = nullptr);

StageData run_stage(const StageData& input, const StageConfig& cfg, const ModelConfig& model_cfg,
                    const StageParams& params, std::uint64_t seed, const ExecOptions& opts = {});

// Full stack -> max over anchors -> max over frames -> classifier head.
// Returns logits [1 x num_classes].
TensorRef classify(const PointCloudVideo& video, const ModelConfig& cfg, const ModelParams& params,
                   std::uint64_t seed, const ExecOptions& opts = {});

struct ComputeAccounting {
  std::size_t param_count = 0;
  std::size_t multiply_adds = 0;         // analytic forward MACs for one video
  std::size_t flops = 0;                 // 2 * multiply_adds
  std::size_t query_distance_evals = 0;  // FPS + ball-query point-pair distances
};

ComputeAccounting count_params_and_flops(const ModelConfig& cfg, std::size_t n_points,
                                         std::size_t t_frames);

// Analytic peak of simultaneously-live tensor values (bytes) for one forward
// pass; window_size 1 models the one-step path, 2*delta_t+1 the dense path.
std::size_t estimate_peak_value_bytes(const ModelConfig& cfg, std::size_t n_points,
                                      std::size_t t_frames, std::size_t window_size);

// Checkpoint container:
//   "PVNX" | u16 version | 32-byte config digest |
//   records: u16 name_len | name | u8 rank | u32 dims... | f64 LE values
void save_checkpoint(const std::string& path, const ModelConfig& cfg, const ModelParams& params);
void load_checkpoint(const std::string& path, const ModelConfig& cfg, ModelParams& params);

constexpr std::uint16_t kCheckpointVersion = 1;

}  // namespace pvnext
