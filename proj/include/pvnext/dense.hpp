#pragma once

#include <cstdint>
#include <vector>

#include "pvnext/model.hpp"

namespace pvnext {

// Temporal-window configuration for the dense-query path. The window around
// frame t is [t - delta_t, t + delta_t] clipped to the sequence.
struct DenseConfig {
  std::size_t delta_t = 1;
  std::size_t k = 1;
  double radius = 0.1;
  std::vector<std::size_t> mlp1;
  std::vector<std::size_t> mlp2;
  std::size_t spatial_stride = 1;
};

DenseConfig dense_config_from_stage(const StageConfig& stage, std::size_t delta_t);

std::pair<std::size_t, std::size_t> dense_window(std::size_t t, std::size_t delta_t,
                                                 std::size_t t_frames);

// One pooled group vector [M x C1] per window frame, in window order.
std::vector<TensorRef> dense_encode_frame(const StageData& input,
                                          const std::vector<Vec3>& anchors_t, std::size_t t,
                                          const DenseConfig& cfg, const StageParams& params);

// Elementwise max across the window.
TensorRef dense_temporal_pool(const std::vector<TensorRef>& window_feats);

// Full dense stage: anchors by FPS, window loop per frame, temporal pooling,
// then the post-pool MLP.
StageData dense_run_stage(const StageData& input, const DenseConfig& cfg,
                          const StageParams& params, std::uint64_t seed,
                          const ExecOptions& opts = {});

}  // namespace pvnext
