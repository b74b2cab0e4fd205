#include "pvnext/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "pvnext/counters.hpp"
#include "pvnext/errors.hpp"
#include "pvnext/rng.hpp"
#include "pvnext/tensor.hpp"

namespace pvnext {
namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_csv(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DataError(DataError::Code::io, "cannot open '" + path + "' for writing");
  return os;
}

void seeded_shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[rng.bounded(i)]);
  }
}

std::size_t argmax_row(const TensorRef& logits) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < logits->size(); ++c) {
    if (logits->values[c] > logits->values[best]) best = c;
  }
  return best;
}

ModelConfig build_config(const std::string& preset, std::size_t num_classes, bool imitator_enabled,
                         int motion_sign, std::size_t imitator_k) {
  ModelConfig cfg = config_for_preset(preset, num_classes);
  cfg.imitator_enabled = imitator_enabled;
  cfg.motion_sign = motion_sign;
  cfg.imitator_k = imitator_k;
  return cfg;
}

std::uint64_t fnv1a_update(std::uint64_t h, const void* data, std::size_t len) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t checksum_feats(const StageData& data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const TensorRef& t : data.feats) {
    h = fnv1a_update(h, t->values.data(), t->values.size() * sizeof(double));
  }
  return h;
}

std::uint64_t median_ns(std::vector<std::uint64_t> samples) {
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  if (n % 2 == 1) return samples[n / 2];
  return (samples[n / 2 - 1] + samples[n / 2]) / 2;
}

}  // namespace

DataSplit stratified_split(const PcvDataset& dataset, std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < dataset.videos.size(); ++i) {
    const std::uint32_t label = dataset.videos[i].label.value_or(0);
    if (label >= by_class.size()) by_class.resize(label + 1);
    by_class[label].push_back(i);
  }
  DataSplit split;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    Rng rng(seed + 0x9e3779b97f4a7c15ull * (c + 1));
    seeded_shuffle(members, rng);
    const std::size_t half = members.size() / 2;
    for (std::size_t i = 0; i < members.size(); ++i) {
      (i < half ? split.train : split.test).push_back(members[i]);
    }
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

EvalReport evaluate_videos(const PcvDataset& dataset, const std::vector<std::size_t>& indices,
                           const ModelConfig& cfg, const ModelParams& params, std::uint64_t seed,
                           double occlude_ratio, std::uint64_t occlude_seed) {
  EvalReport report;
  report.indices = indices;
  report.confusion.assign(cfg.num_classes, std::vector<std::size_t>(cfg.num_classes, 0));
  std::size_t correct = 0;
  for (std::size_t idx : indices) {
    const PointCloudVideo& original = dataset.videos[idx];
    const std::uint32_t label = original.label.value_or(0);
    if (label >= cfg.num_classes) {
      throw ConfigError("eval: label " + std::to_string(label) + " outside " +
                        std::to_string(cfg.num_classes) + " classes");
    }
    TensorRef logits;
    if (occlude_ratio > 0.0) {
      const PointCloudVideo corrupted = drop_local(original, occlude_ratio, occlude_seed + idx);
      logits = classify(corrupted, cfg, params, seed);
    } else {
      logits = classify(original, cfg, params, seed);
    }
    const std::size_t pred = argmax_row(logits);
    report.predicted.push_back(pred);
    report.confusion[label][pred] += 1;
    if (pred == label) ++correct;
  }
  report.accuracy = indices.empty() ? 0.0 : double(correct) / double(indices.size());
  return report;
}

SynthResult cmd_synth(const SynthOptions& opt) {
  const PcvDataset dataset = generate_synthetic(opt.spec);
  write_pcv(opt.out_path, dataset);
  SynthResult res;
  res.num_videos = dataset.videos.size();
  res.file_bytes = static_cast<std::size_t>(std::filesystem::file_size(opt.out_path));
  return res;
}

TrainResult cmd_train(const TrainOptions& opt) {
  if (opt.batch_size == 0) throw ConfigError("train: batch size must be positive");
  const PcvDataset dataset = read_pcv(opt.data_path);
  if (dataset.videos.empty()) throw ConfigError("train: dataset is empty");

  ModelConfig cfg = build_config(opt.preset, dataset.num_classes, opt.imitator_enabled,
                                 opt.motion_sign, opt.imitator_k);
  ModelParams params = init_params(cfg, opt.seed);
  const DataSplit split = stratified_split(dataset, opt.seed);
  if (split.train.empty()) throw ConfigError("train: empty training split");

  counters().reset();

  SgdSchedule schedule;
  schedule.base_lr = opt.base_lr;
  schedule.total_epochs = std::max<std::size_t>(1, opt.epochs);
  schedule.momentum = opt.momentum;
  SgdOptimizer optimizer(schedule);

  std::ofstream csv;
  if (!opt.csv_path.empty()) {
    csv = open_csv(opt.csv_path);
    csv << "schema_version,epoch,lr,train_loss,test_accuracy,ball_queries,member_embeddings,"
           "multiply_adds\n";
  }

  TrainResult result;
  result.cfg = cfg;
  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    std::vector<std::size_t> order = split.train;
    Rng shuffle_rng(opt.seed + 0x51ed2701ull * (epoch + 1));
    seeded_shuffle(order, shuffle_rng);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
      const std::size_t end = std::min(order.size(), start + opt.batch_size);
      params.zero_grads();
      for (std::size_t i = start; i < end; ++i) {
        const PointCloudVideo& video = dataset.videos[order[i]];
        TensorRef logits = classify(video, cfg, params, opt.seed);
        TensorRef loss =
            softmax_cross_entropy(logits, {std::size_t(video.label.value_or(0))});
        if (!std::isfinite(loss->values[0])) {
          throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch));
        }
        epoch_loss += loss->values[0];
        backward(loss);
      }
      optimizer.step(params.named, epoch, 1.0 / double(end - start));
    }
    epoch_loss /= double(order.size());

    const EvalReport test_report = evaluate_videos(dataset, split.test, cfg, params, opt.seed);
    result.final_train_loss = epoch_loss;
    result.final_test_accuracy = test_report.accuracy;

    if (csv.is_open()) {
      const CounterSnapshot snap = snapshot_counters();
      csv << 1 << ',' << epoch << ',' << fmt_double(schedule.lr(epoch)) << ','
          << fmt_double(epoch_loss) << ',' << fmt_double(test_report.accuracy) << ','
          << snap.ball_queries << ',' << snap.member_embeddings << ',' << snap.multiply_adds
          << '\n';
    }
  }

  if (!opt.checkpoint_path.empty()) save_checkpoint(opt.checkpoint_path, cfg, params);
  return result;
}

EvalReport cmd_eval(const EvalOptions& opt) {
  const PcvDataset dataset = read_pcv(opt.data_path);
  if (dataset.videos.empty()) throw ConfigError("eval: dataset is empty");

  ModelConfig cfg = build_config(opt.preset, dataset.num_classes, opt.imitator_enabled,
                                 opt.motion_sign, opt.imitator_k);
  ModelParams params = init_params(cfg, opt.seed);
  load_checkpoint(opt.checkpoint_path, cfg, params);

  const DataSplit split = stratified_split(dataset, opt.seed);
  const EvalReport report = evaluate_videos(dataset, split.test, cfg, params, opt.seed,
                                            opt.occlude_ratio, opt.occlude_seed);

  if (!opt.csv_path.empty()) {
    std::ofstream csv = open_csv(opt.csv_path);
    csv << "schema_version,true_class,total,correct";
    for (std::size_t c = 0; c < cfg.num_classes; ++c) csv << ",pred_" << c;
    csv << '\n';
    for (std::size_t c = 0; c < cfg.num_classes; ++c) {
      const auto& row = report.confusion[c];
      const std::size_t total = std::accumulate(row.begin(), row.end(), std::size_t(0));
      csv << 1 << ',' << c << ',' << total << ',' << row[c];
      for (std::size_t p = 0; p < cfg.num_classes; ++p) csv << ',' << row[p];
      csv << '\n';
    }
  }
  return report;
}

ImitatorEvalResult cmd_imitator_eval(const ImitatorEvalOptions& opt) {
  const PcvDataset dataset = read_pcv(opt.data_path);
  if (dataset.videos.empty()) throw ConfigError("imitator-eval: dataset is empty");

  const ModelConfig cfg = config_for_preset(opt.preset, std::max(1u, dataset.num_classes));
  const StageConfig& stage = cfg.stages.front();

  std::ofstream csv;
  if (!opt.csv_path.empty()) {
    csv = open_csv(opt.csv_path);
    csv << "schema_version,video,frame,chamfer_advected,chamfer_baseline\n";
  }

  ImitatorEvalResult result;
  double sum_advected = 0.0, sum_baseline = 0.0;
  for (std::size_t v = 0; v < dataset.videos.size(); ++v) {
    const PointCloudVideo& video = dataset.videos[v];
    if (video.num_frames() < 2) throw ConfigError("imitator-eval: needs T >= 2");
    const std::size_t m =
        std::max<std::size_t>(1, video.points_per_frame() / stage.spatial_stride);
    const auto [anchors, motion] =
        imitate(video, m, opt.imitator_k, stage.radius, opt.seed, opt.motion_sign);

    for (std::size_t t = 0; t + 1 < video.num_frames(); ++t) {
      const auto groups =
          ball_query(anchors.coords[t], video.frames[t], stage.radius, stage.nsamples);
      PointSet advected, baseline;
      advected.reserve(m * stage.nsamples);
      baseline.reserve(m * stage.nsamples);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t idx : groups[i].neighbor_indices) {
          baseline.push_back(video.frames[t][idx]);
          advected.push_back(video.frames[t][idx] + motion.vectors[t][i]);
        }
      }
      const double chamfer_advected = chamfer_distance(advected, video.frames[t + 1]);
      const double chamfer_baseline = chamfer_distance(baseline, video.frames[t + 1]);
      sum_advected += chamfer_advected;
      sum_baseline += chamfer_baseline;
      ++result.rows;
      if (csv.is_open()) {
        csv << 1 << ',' << v << ',' << t << ',' << fmt_double(chamfer_advected) << ','
            << fmt_double(chamfer_baseline) << '\n';
      }
    }
  }
  result.mean_chamfer_advected = sum_advected / double(result.rows);
  result.mean_chamfer_baseline = sum_baseline / double(result.rows);
  if (csv.is_open()) {
    csv << 1 << ",-1,-1," << fmt_double(result.mean_chamfer_advected) << ','
        << fmt_double(result.mean_chamfer_baseline) << '\n';
  }
  return result;
}

std::vector<BenchRow> cmd_bench(const BenchOptions& opt) {
  if (opt.pipeline != "onestep" && opt.pipeline != "dense" && opt.pipeline != "both") {
    throw ConfigError("bench: pipeline must be onestep, dense, or both");
  }
  if (opt.iters == 0) throw ConfigError("bench: iters must be positive");

  const ModelConfig cfg = config_for_preset(opt.preset, 20);
  if (opt.stage_index >= cfg.stages.size()) {
    throw ConfigError("bench: stage index " + std::to_string(opt.stage_index) + " out of range");
  }

  SyntheticSpec spec;
  spec.classes = {MotionClass::kTranslateX};
  spec.n_points = opt.n_points;
  spec.t_frames = opt.t_frames;
  spec.videos_per_class = 1;
  spec.noise_sigma = 0.01;
  spec.seed = opt.seed;
  const PcvDataset dataset = generate_synthetic(spec);
  const PointCloudVideo& video = dataset.videos.front();

  ModelParams params = init_params(cfg, opt.seed);

  // run the stages before the benchmarked one, untimed
  StageData input = stage_data_from_video(video);
  for (std::size_t s = 0; s < opt.stage_index; ++s) {
    input = run_stage(input, cfg.stages[s], cfg, params.stages[s], opt.seed);
  }
  const StageConfig& stage = cfg.stages[opt.stage_index];
  const StageParams& stage_params = params.stages[opt.stage_index];
  const std::size_t m_in = input.points_per_frame();
  const std::size_t m_out = std::max<std::size_t>(1, m_in / stage.spatial_stride);
  const std::size_t in1 = 3 + input.feat_width();

  auto mlp_macs = [](std::size_t in, const std::vector<std::size_t>& widths) {
    std::size_t total = 0;
    for (std::size_t w : widths) {
      total += in * w;
      in = w;
    }
    return total;
  };
  const std::size_t mlp1_macs = mlp_macs(in1, stage.mlp1);
  const std::size_t mlp2_macs = stage.mlp2.empty() ? 0 : mlp_macs(stage.mlp1.back(), stage.mlp2);
  const std::size_t c1 = stage.mlp1.back();
  const std::size_t c2 = stage.mlp2.empty() ? c1 : stage.mlp2.back();

  ExecOptions exec;
  exec.parallel_frames = opt.threads;
  const std::size_t t_frames = input.num_frames();

  std::vector<BenchRow> rows;
  auto run_pipeline = [&](const std::string& pipeline) {
    DenseConfig dense_cfg = dense_config_from_stage(stage, opt.delta_t);
    ExecOptions pipeline_exec = exec;
    pipeline_exec.force_zero_motion = opt.zero_motion;

    auto run_once = [&]() -> StageData {
      if (pipeline == "onestep") {
        return run_stage(input, stage, cfg, stage_params, opt.seed, pipeline_exec);
      }
      return dense_run_stage(input, dense_cfg, stage_params, opt.seed, pipeline_exec);
    };

    BenchRow row;
    row.pipeline = pipeline;
    row.delta_t = pipeline == "dense" ? opt.delta_t : 0;
    row.n_points = opt.n_points;
    row.t_frames = opt.t_frames;
    row.m_out = m_out;
    row.k = stage.nsamples;
    row.threads = opt.threads;
    row.warmups = opt.warmups;
    row.iters = opt.iters;

    // one instrumented, untimed iteration for exact counters and the checksum
    counters().reset();
    const StageData probe = run_once();
    const CounterSnapshot snap = snapshot_counters();
    row.ball_queries = snap.ball_queries;
    row.member_embeddings = snap.member_embeddings;
    row.multiply_adds_measured = snap.multiply_adds;
    row.distance_evals = snap.distance_evals;
    row.checksum = checksum_feats(probe);

    if (pipeline == "onestep") {
      row.macs_analytic = m_out * t_frames * (stage.nsamples * mlp1_macs + mlp2_macs);
    } else {
      std::size_t window_total = 0;
      for (std::size_t t = 0; t < t_frames; ++t) {
        const auto [lo, hi] = dense_window(t, opt.delta_t, t_frames);
        window_total += hi - lo + 1;
      }
      row.macs_analytic =
          m_out * (window_total * stage.nsamples * mlp1_macs + t_frames * mlp2_macs);
    }
    std::size_t param_count = 0;
    for (const LinearLayer& l : stage_params.mlp1.layers) {
      param_count += l.in_dim * l.out_dim + l.out_dim;
    }
    for (const LinearLayer& l : stage_params.mlp2.layers) {
      param_count += l.in_dim * l.out_dim + l.out_dim;
    }
    row.params = param_count;
    const std::size_t window = pipeline == "dense" ? 2 * opt.delta_t + 1 : 1;
    row.peak_bytes_estimate =
        sizeof(double) * (m_in * t_frames * (3 + input.feat_width()) +
                          m_out * stage.nsamples * (in1 + c1) + window * m_out * c1 +
                          m_out * t_frames * (3 + c2) + param_count);

    for (std::size_t w = 0; w < opt.warmups; ++w) run_once();
    std::vector<std::uint64_t> samples;
    samples.reserve(opt.iters);
    for (std::size_t i = 0; i < opt.iters; ++i) {
      const auto start = std::chrono::steady_clock::now();
      const StageData result = run_once();
      const auto stop = std::chrono::steady_clock::now();
      (void)result;
      samples.push_back(
          std::chrono::duration_cast<std::chrono::nanoseconds>(stop - start).count());
    }
    row.wall_ns_median = median_ns(std::move(samples));
    rows.push_back(std::move(row));
  };

  if (opt.pipeline == "onestep" || opt.pipeline == "both") run_pipeline("onestep");
  if (opt.pipeline == "dense" || opt.pipeline == "both") run_pipeline("dense");

  if (!opt.csv_path.empty()) {
    std::ofstream csv = open_csv(opt.csv_path);
    csv << "schema_version,pipeline,preset,stage,delta_t,n_points,t_frames,m_out,k,threads,"
           "warmups,iters,wall_ns_median,ball_queries,member_embeddings,multiply_adds_measured,"
           "distance_evals,macs_analytic,flops_analytic,params,peak_bytes_estimate,checksum\n";
    for (const BenchRow& row : rows) {
      csv << 1 << ',' << row.pipeline << ',' << opt.preset << ',' << opt.stage_index << ','
          << row.delta_t << ',' << row.n_points << ',' << row.t_frames << ',' << row.m_out << ','
          << row.k << ',' << row.threads << ',' << row.warmups << ',' << row.iters << ','
          << row.wall_ns_median << ',' << row.ball_queries << ',' << row.member_embeddings << ','
          << row.multiply_adds_measured << ',' << row.distance_evals << ',' << row.macs_analytic
          << ',' << 2 * row.macs_analytic << ',' << row.params << ',' << row.peak_bytes_estimate
          << ',' << row.checksum << '\n';
    }
  }
  return rows;
}

}  // namespace pvnext
