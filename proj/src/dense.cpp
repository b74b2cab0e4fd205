#include "pvnext/dense.hpp"

#include <algorithm>
#include <future>

#include "pvnext/errors.hpp"

namespace pvnext {

DenseConfig dense_config_from_stage(const StageConfig& stage, std::size_t delta_t) {
  DenseConfig cfg;
  cfg.delta_t = delta_t;
  cfg.k = stage.nsamples;
  cfg.radius = stage.radius;
  cfg.mlp1 = stage.mlp1;
  cfg.mlp2 = stage.mlp2;
  cfg.spatial_stride = stage.spatial_stride;
  return cfg;
}

std::pair<std::size_t, std::size_t> dense_window(std::size_t t, std::size_t delta_t,
                                                 std::size_t t_frames) {
  const std::size_t lo = t > delta_t ? t - delta_t : 0;
  const std::size_t hi = std::min(t_frames - 1, t + delta_t);
  return {lo, hi};
}

std::vector<TensorRef> dense_encode_frame(const StageData& input,
                                          const std::vector<Vec3>& anchors_t, std::size_t t,
                                          const DenseConfig& cfg, const StageParams& params) {
  const std::size_t t_frames = input.num_frames();
  if (t >= t_frames) throw ConfigError("dense: frame index out of range");
  const std::size_t m = anchors_t.size();

  const auto [lo, hi] = dense_window(t, cfg.delta_t, t_frames);
  std::vector<TensorRef> window_feats;
  window_feats.reserve(hi - lo + 1);
  for (std::size_t tau = lo; tau <= hi; ++tau) {
    const PointSet& frame = input.coords[tau];
    const auto groups = ball_query(anchors_t, frame, cfg.radius, cfg.k);

    std::vector<Vec3> rel;
    std::vector<std::size_t> flat_indices;
    rel.reserve(m * cfg.k);
    flat_indices.reserve(m * cfg.k);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t idx : groups[i].neighbor_indices) {
        rel.push_back(frame[idx] - anchors_t[i]);
        flat_indices.push_back(idx);
      }
    }
    const TensorRef feats_tau = input.feats.empty() ? nullptr : input.feats[tau];
    window_feats.push_back(
        encode_group_members(rel, feats_tau, flat_indices, m, cfg.k, params.mlp1));
  }
  return window_feats;
}

TensorRef dense_temporal_pool(const std::vector<TensorRef>& window_feats) {
  if (window_feats.empty()) throw ConfigError("dense: empty window");
  const std::size_t m = window_feats.front()->shape[0];
  const std::size_t c = window_feats.front()->shape[1];
  TensorRef stacked = reshape(concat_rows(window_feats), {window_feats.size(), m, c});
  return maxpool_over_axis(stacked, 0).values;
}

StageData dense_run_stage(const StageData& input, const DenseConfig& cfg,
                          const StageParams& params, std::uint64_t seed,
                          const ExecOptions& opts) {
  const std::size_t t_frames = input.num_frames();
  const std::size_t m_in = input.points_per_frame();
  if (t_frames == 0 || m_in == 0) throw ConfigError("dense: empty input");
  if (cfg.spatial_stride == 0) throw ConfigError("dense: stride must be positive");
  const std::size_t m_out = std::max<std::size_t>(1, m_in / cfg.spatial_stride);

  PointCloudVideo stage_video;
  stage_video.frames = input.coords;
  const AnchorTrack anchors = select_anchors(stage_video, m_out, seed);

  StageData out;
  out.coords = anchors.coords;
  out.feats.resize(t_frames);

  auto encode_frame = [&](std::size_t t) {
    TensorRef pooled =
        dense_temporal_pool(dense_encode_frame(input, anchors.coords[t], t, cfg, params));
    if (!params.mlp2.layers.empty()) pooled = params.mlp2.forward(pooled);
    out.feats[t] = pooled;
  };

  const int workers = std::max(1, opts.parallel_frames);
  if (workers == 1 || t_frames == 1) {
    for (std::size_t t = 0; t < t_frames; ++t) encode_frame(t);
  } else {
    std::vector<std::future<void>> futures;
    const std::size_t n_workers = std::min<std::size_t>(workers, t_frames);
    for (std::size_t w = 0; w < n_workers; ++w) {
      futures.push_back(std::async(std::launch::async, [&, w]() {
        for (std::size_t t = w; t < t_frames; t += n_workers) encode_frame(t);
      }));
    }
    for (auto& f : futures) f.get();
  }
  return out;
}

}  // namespace pvnext
