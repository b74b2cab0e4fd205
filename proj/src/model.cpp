#include "pvnext/model.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <future>
#include <map>

#include "pvnext/counters.hpp"
#include "pvnext/errors.hpp"

namespace pvnext {
namespace {

std::string widths_string(const std::vector<std::size_t>& widths) {
  std::string s;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(widths[i]);
  }
  return s;
}

std::string radius_string(double r) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", r);
  return buf;
}

MotionField zero_motion(std::size_t t_frames, std::size_t m) {
  MotionField field;
  field.sign = +1;
  field.vectors.assign(t_frames, std::vector<Vec3>(m, Vec3{0.0, 0.0, 0.0}));
  return field;
}

}  // namespace

ModelConfig make_msr_config(std::size_t num_classes) {
  ModelConfig cfg;
  cfg.num_classes = num_classes;
  cfg.stages = {
      {{64}, {}, 48, 32, 0.2},
      {{128}, {128, 256}, 32, 8, 0.4},
      {{512}, {512, 1024}, 8, 2, 0.4},
  };
  return cfg;
}

ModelConfig make_ntu_config(std::size_t num_classes) {
  ModelConfig cfg;
  cfg.num_classes = num_classes;
  cfg.stages = {
      {{64}, {}, 32, 8, 0.1},
      {{128}, {128, 256}, 48, 8, 0.2},
      {{128}, {128, 256}, 16, 1, 0.4},
      {{128}, {128, 256}, 24, 1, 0.4},
      {{512}, {512, 1024}, 32, 4, 0.8},
  };
  return cfg;
}

ModelConfig make_micro_config(std::size_t num_classes) {
  ModelConfig cfg;
  cfg.num_classes = num_classes;
  cfg.stages = {
      {{16}, {16, 32}, 8, 4, 0.3},
  };
  return cfg;
}

ModelConfig config_for_preset(const std::string& preset, std::size_t num_classes) {
  if (preset == "msr") return make_msr_config(num_classes);
  if (preset == "micro") return make_micro_config(num_classes);
  if (preset == "ntu") return make_ntu_config(num_classes);
  throw ConfigError("unknown preset '" + preset + "' (expected msr or micro)");
}

std::string config_canonical_string(const ModelConfig& cfg) {
  std::string s = "pvnext-model v1\n";
  for (const StageConfig& st : cfg.stages) {
    s += "stage mlp1=" + widths_string(st.mlp1) + " mlp2=" + widths_string(st.mlp2) +
         " nsamples=" + std::to_string(st.nsamples) +
         " stride=" + std::to_string(st.spatial_stride) + " radius=" + radius_string(st.radius) +
         "\n";
  }
  s += "classes=" + std::to_string(cfg.num_classes) +
       " imitator_k=" + std::to_string(cfg.imitator_k) +
       " imitator=" + std::to_string(cfg.imitator_enabled ? 1 : 0) +
       " sign=" + std::to_string(cfg.motion_sign) + " head=" + widths_string(cfg.head_hidden) +
       "\n";
  return s;
}

Sha256Digest config_digest(const ModelConfig& cfg) {
  return sha256(config_canonical_string(cfg));
}

void ModelParams::zero_grads() {
  for (auto& [name, p] : named) p->zero_grad();
}

ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
  if (cfg.stages.empty()) throw ConfigError("model: no stages");
  if (cfg.num_classes == 0) throw ConfigError("model: num_classes must be positive");
  if (cfg.motion_sign != 1 && cfg.motion_sign != -1) {
    throw ConfigError("model: motion_sign must be +1 or -1");
  }

  Rng rng(seed);
  ModelParams params;
  std::size_t c_in = 0;
  for (std::size_t s = 0; s < cfg.stages.size(); ++s) {
    const StageConfig& st = cfg.stages[s];
    if (st.mlp1.empty()) throw ConfigError("stage " + std::to_string(s) + ": mlp1 empty");
    StageParams sp;
    sp.mlp1 = make_mlp(3 + c_in, st.mlp1, /*relu_after_last=*/true, rng);
    c_in = st.mlp1.back();
    if (!st.mlp2.empty()) {
      sp.mlp2 = make_mlp(c_in, st.mlp2, /*relu_after_last=*/true, rng);
      c_in = st.mlp2.back();
    }
    params.stages.push_back(std::move(sp));
  }

  std::vector<std::size_t> head_widths = cfg.head_hidden;
  head_widths.push_back(cfg.num_classes);
  params.head = make_mlp(c_in, head_widths, /*relu_after_last=*/false, rng);

  auto register_mlp = [&params](const std::string& prefix, const MlpBlock& mlp) {
    for (std::size_t i = 0; i < mlp.layers.size(); ++i) {
      params.named.emplace_back(prefix + "." + std::to_string(i) + ".weight",
                                mlp.layers[i].weight);
      params.named.emplace_back(prefix + "." + std::to_string(i) + ".bias", mlp.layers[i].bias);
    }
  };
  for (std::size_t s = 0; s < params.stages.size(); ++s) {
    register_mlp("stage" + std::to_string(s) + ".mlp1", params.stages[s].mlp1);
    register_mlp("stage" + std::to_string(s) + ".mlp2", params.stages[s].mlp2);
  }
  register_mlp("head", params.head);
  return params;
}

StageData stage_data_from_video(const PointCloudVideo& video) {
  StageData data;
  data.coords = video.frames;
  return data;
}

std::vector<Vec3> synthesize_virtual_frame(const std::vector<Vec3>& h, std::size_t k,
                                           const std::vector<Vec3>& motion) {
  if (k == 0 || h.size() != motion.size() * k) {
    throw DimensionError("virtual frame: " + std::to_string(h.size()) + " rows != " +
                         std::to_string(motion.size()) + " anchors x k=" + std::to_string(k));
  }
  std::vector<Vec3> out(h.size());
  for (std::size_t i = 0; i < motion.size(); ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      out[i * k + j] = h[i * k + j] + motion[i];
    }
  }
  return out;
}

TensorRef encode_group_members(const std::vector<Vec3>& member_rel, const TensorRef& frame_feats,
                               const std::vector<std::size_t>& flat_indices, std::size_t m,
                               std::size_t k, const MlpBlock& mlp1) {
  if (member_rel.size() != m * k) {
    throw DimensionError("encode: expected " + std::to_string(m * k) + " member rows, got " +
                         std::to_string(member_rel.size()));
  }
  std::vector<double> coord_values;
  coord_values.reserve(member_rel.size() * 3);
  for (const Vec3& p : member_rel) {
    coord_values.push_back(p[0]);
    coord_values.push_back(p[1]);
    coord_values.push_back(p[2]);
  }
  TensorRef members = Tensor::constant({m * k, 3}, std::move(coord_values));
  if (frame_feats) {
    members = concat_cols(members, gather_rows(frame_feats, flat_indices));
  }
  counters().member_embeddings.fetch_add(m * k, std::memory_order_relaxed);

  TensorRef embedded = mlp1.forward(members);                    // [M*K x C1]
  const std::size_t c1 = embedded->shape[1];
  TensorRef grouped = reshape(embedded, {m, k, c1});
  return maxpool_over_axis(grouped, 1).values;                   // [M x C1]
}

TensorRef one_step_encode(const PointSet& frame_coords, const TensorRef& frame_feats,
                          const std::vector<Vec3>& anchor_coords, const std::vector<Vec3>& motion,
                          const StageConfig& cfg, const StageParams& params,
                          StageTraceEntry* trace) {
  if (anchor_coords.size() != motion.size()) {
    throw DimensionError("one_step_encode: anchors/motion size mismatch");
  }
  const std::size_t m = anchor_coords.size();
  const std::size_t k = cfg.nsamples;

  const auto groups = ball_query(anchor_coords, frame_coords, cfg.radius, k);

  std::vector<Vec3> h;
  std::vector<std::size_t> flat_indices;
  h.reserve(m * k);
  flat_indices.reserve(m * k);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t idx : groups[i].neighbor_indices) {
      h.push_back(frame_coords[idx] - anchor_coords[i]);
      flat_indices.push_back(idx);
    }
  }
  const std::vector<Vec3> h_prime = synthesize_virtual_frame(h, k, motion);
  if (trace) {
    trace->h.insert(trace->h.end(), h.begin(), h.end());
    trace->h_prime.insert(trace->h_prime.end(), h_prime.begin(), h_prime.end());
  }

  TensorRef pooled = encode_group_members(h_prime, frame_feats, flat_indices, m, k, params.mlp1);
  if (!params.mlp2.layers.empty()) pooled = params.mlp2.forward(pooled);
  return pooled;
}

StageData run_stage(const StageData& input, const StageConfig& cfg, const ModelConfig& model_cfg,
                    const StageParams& params, std::uint64_t seed, const ExecOptions& opts) {
  const std::size_t t_frames = input.num_frames();
  const std::size_t m_in = input.points_per_frame();
  if (t_frames == 0 || m_in == 0) throw ConfigError("stage: empty input");
  if (cfg.spatial_stride == 0) throw ConfigError("stage: stride must be positive");
  const std::size_t m_out = std::max<std::size_t>(1, m_in / cfg.spatial_stride);

  PointCloudVideo stage_video;
  stage_video.frames = input.coords;

  AnchorTrack anchors;
  MotionField motion;
  if (model_cfg.imitator_enabled) {
    auto [a, x] = imitate(stage_video, m_out, model_cfg.imitator_k, cfg.radius, seed,
                          model_cfg.motion_sign);
    anchors = std::move(a);
    motion = std::move(x);
    if (opts.force_zero_motion) motion = zero_motion(t_frames, m_out);
  } else {
    anchors = select_anchors(stage_video, m_out, seed);
    motion = zero_motion(t_frames, m_out);
  }

  StageData out;
  out.coords = anchors.coords;
  out.feats.resize(t_frames);

  StageTraceEntry* trace_entry = nullptr;
  if (opts.trace) {
    opts.trace->stages.emplace_back();
    trace_entry = &opts.trace->stages.back();
  }

  auto encode_frame = [&](std::size_t t) {
    const TensorRef feats_t = input.feats.empty() ? nullptr : input.feats[t];
    out.feats[t] = one_step_encode(input.coords[t], feats_t, anchors.coords[t], motion.vectors[t],
                                   cfg, params, trace_entry);
  };

  const int workers = std::max(1, opts.parallel_frames);
  if (workers == 1 || t_frames == 1) {
    for (std::size_t t = 0; t < t_frames; ++t) encode_frame(t);
  } else {
    if (trace_entry) throw ConfigError("stage trace requires parallel_frames == 1");
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

TensorRef classify(const PointCloudVideo& video, const ModelConfig& cfg, const ModelParams& params,
                   std::uint64_t seed, const ExecOptions& opts) {
  validate_video(video);
  if (params.stages.size() != cfg.stages.size()) {
    throw ConfigError("classify: params built for a different stage count");
  }

  StageData data = stage_data_from_video(video);
  for (std::size_t s = 0; s < cfg.stages.size(); ++s) {
    data = run_stage(data, cfg.stages[s], cfg, params.stages[s], seed, opts);
  }

  const std::size_t t_frames = data.num_frames();
  const std::size_t m = data.points_per_frame();
  const std::size_t c = data.feat_width();
  TensorRef stacked = reshape(concat_rows(data.feats), {t_frames, m, c});
  TensorRef per_frame = maxpool_over_axis(stacked, 1).values;  // [T x C]
  TensorRef video_feat = maxpool_over_axis(per_frame, 0).values;
  return params.head.forward(reshape(video_feat, {1, c}));
}

ComputeAccounting count_params_and_flops(const ModelConfig& cfg, std::size_t n_points,
                                         std::size_t t_frames) {
  auto mlp_params = [](std::size_t in, const std::vector<std::size_t>& widths) {
    std::size_t total = 0;
    for (std::size_t w : widths) {
      total += in * w + w;
      in = w;
    }
    return total;
  };
  auto mlp_macs = [](std::size_t in, const std::vector<std::size_t>& widths) {
    std::size_t total = 0;
    for (std::size_t w : widths) {
      total += in * w;
      in = w;
    }
    return total;
  };

  ComputeAccounting acc;
  std::size_t m = n_points;
  std::size_t c_in = 0;
  for (const StageConfig& st : cfg.stages) {
    const std::size_t m_out = std::max<std::size_t>(1, m / st.spatial_stride);
    const std::size_t in1 = 3 + c_in;
    acc.param_count += mlp_params(in1, st.mlp1);
    std::size_t c1 = st.mlp1.back();
    std::size_t mlp2_macs = 0;
    if (!st.mlp2.empty()) {
      acc.param_count += mlp_params(c1, st.mlp2);
      mlp2_macs = mlp_macs(c1, st.mlp2);
      c1 = st.mlp2.back();
    }
    acc.multiply_adds += m_out * t_frames * (st.nsamples * mlp_macs(in1, st.mlp1) + mlp2_macs);

    // FPS scans m per selection; imitator and encoder queries scan m per anchor
    acc.query_distance_evals += t_frames * (m_out - 1) * m;
    acc.query_distance_evals += (cfg.imitator_enabled ? 2 : 1) * t_frames * m_out * m;

    c_in = c1;
    m = m_out;
  }

  std::vector<std::size_t> head_widths = cfg.head_hidden;
  head_widths.push_back(cfg.num_classes);
  acc.param_count += mlp_params(c_in, head_widths);
  acc.multiply_adds += mlp_macs(c_in, head_widths);
  acc.flops = 2 * acc.multiply_adds;
  return acc;
}

std::size_t estimate_peak_value_bytes(const ModelConfig& cfg, std::size_t n_points,
                                      std::size_t t_frames, std::size_t window_size) {
  std::size_t peak = 0;
  std::size_t m = n_points;
  std::size_t c_in = 0;
  std::size_t carried = n_points * t_frames * 3;  // stage input coords
  for (const StageConfig& st : cfg.stages) {
    const std::size_t m_out = std::max<std::size_t>(1, m / st.spatial_stride);
    const std::size_t in1 = 3 + c_in;
    const std::size_t c1 = st.mlp1.back();
    const std::size_t c2 = st.mlp2.empty() ? c1 : st.mlp2.back();
    // live during one frame encode: member matrix, embeddings, window of
    // pooled group vectors, stage outputs accumulated so far
    const std::size_t transient =
        m_out * st.nsamples * (in1 + c1) + window_size * m_out * c1 + m_out * c2;
    const std::size_t outputs = m_out * t_frames * (3 + c2);
    peak = std::max(peak, (carried + transient + outputs) * sizeof(double));
    carried = outputs;
    c_in = c2;
    m = m_out;
  }
  ComputeAccounting acc = count_params_and_flops(cfg, n_points, t_frames);
  return peak + acc.param_count * sizeof(double);
}

void save_checkpoint(const std::string& path, const ModelConfig& cfg, const ModelParams& params) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError(DataError::Code::io, "checkpoint: cannot open '" + path + "'");

  auto write_u16 = [&os](std::uint16_t v) {
    const std::uint8_t b[2] = {std::uint8_t(v), std::uint8_t(v >> 8)};
    os.write(reinterpret_cast<const char*>(b), 2);
  };
  auto write_u32 = [&os](std::uint32_t v) {
    const std::uint8_t b[4] = {std::uint8_t(v), std::uint8_t(v >> 8), std::uint8_t(v >> 16),
                               std::uint8_t(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
  };

  os.write("PVNX", 4);
  write_u16(kCheckpointVersion);
  const Sha256Digest digest = config_digest(cfg);
  os.write(reinterpret_cast<const char*>(digest.data()), digest.size());

  for (const auto& [name, tensor] : params.named) {
    write_u16(static_cast<std::uint16_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    os.put(static_cast<char>(tensor->rank()));
    for (std::size_t d : tensor->shape) write_u32(static_cast<std::uint32_t>(d));
    for (double v : tensor->values) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, 8);
      std::uint8_t b[8];
      for (int i = 0; i < 8; ++i) b[i] = std::uint8_t(bits >> (8 * i));
      os.write(reinterpret_cast<const char*>(b), 8);
    }
  }
  if (!os) throw DataError(DataError::Code::io, "checkpoint: write failed for '" + path + "'");
}

void load_checkpoint(const std::string& path, const ModelConfig& cfg, ModelParams& params) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError(DataError::Code::io, "checkpoint: cannot open '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                  std::istreambuf_iterator<char>());

  std::size_t pos = 0;
  auto need = [&](std::size_t n) {
    if (pos + n > bytes.size()) {
      throw DataError(DataError::Code::truncated, "checkpoint: truncated at byte " +
                                                      std::to_string(pos));
    }
  };
  need(4 + 2 + 32);
  if (std::memcmp(bytes.data(), "PVNX", 4) != 0) {
    throw DataError(DataError::Code::bad_magic, "checkpoint: bad magic");
  }
  const std::uint16_t version = std::uint16_t(bytes[4]) | (std::uint16_t(bytes[5]) << 8);
  if (version != kCheckpointVersion) {
    throw DataError(DataError::Code::version_mismatch,
                    "checkpoint: version " + std::to_string(version));
  }
  Sha256Digest stored;
  std::memcpy(stored.data(), bytes.data() + 6, 32);
  const Sha256Digest expected = config_digest(cfg);
  if (stored != expected) {
    throw DataError(DataError::Code::digest_mismatch,
                    "checkpoint: config digest " + to_hex(stored) + " does not match " +
                        to_hex(expected));
  }
  pos = 38;

  std::map<std::string, std::pair<std::vector<std::size_t>, std::vector<double>>> records;
  while (pos < bytes.size()) {
    need(2);
    const std::size_t name_len = std::size_t(bytes[pos]) | (std::size_t(bytes[pos + 1]) << 8);
    pos += 2;
    need(name_len + 1);
    std::string name(reinterpret_cast<const char*>(bytes.data() + pos), name_len);
    pos += name_len;
    const std::size_t rank = bytes[pos++];
    need(4 * rank);
    std::vector<std::size_t> dims(rank);
    std::size_t count = 1;
    for (std::size_t d = 0; d < rank; ++d) {
      dims[d] = std::size_t(bytes[pos]) | (std::size_t(bytes[pos + 1]) << 8) |
                (std::size_t(bytes[pos + 2]) << 16) | (std::size_t(bytes[pos + 3]) << 24);
      pos += 4;
      count *= dims[d];
    }
    need(8 * count);
    std::vector<double> values(count);
    for (std::size_t i = 0; i < count; ++i) {
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) bits |= std::uint64_t(bytes[pos + b]) << (8 * b);
      pos += 8;
      std::memcpy(&values[i], &bits, 8);
    }
    if (!records.emplace(std::move(name), std::make_pair(std::move(dims), std::move(values)))
             .second) {
      throw DataError(DataError::Code::schema_mismatch, "checkpoint: duplicate parameter");
    }
  }

  if (records.size() != params.named.size()) {
    throw DataError(DataError::Code::schema_mismatch,
                    "checkpoint: holds " + std::to_string(records.size()) + " parameters, model " +
                        std::to_string(params.named.size()));
  }
  for (auto& [name, tensor] : params.named) {
    auto it = records.find(name);
    if (it == records.end()) {
      throw DataError(DataError::Code::schema_mismatch, "checkpoint: missing parameter " + name);
    }
    if (it->second.first != tensor->shape) {
      throw DataError(DataError::Code::schema_mismatch, "checkpoint: shape mismatch for " + name);
    }
    tensor->values = std::move(it->second.second);
  }
}

}  // namespace pvnext
