#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pvnext/commands.hpp"
#include "pvnext/errors.hpp"

namespace {

int parse_sign(const std::string& s) {
  if (s == "+1" || s == "1") return +1;
  if (s == "-1") return -1;
  throw pvnext::ConfigError("--motion-sign must be +1 or -1, got '" + s + "'");
}

bool parse_on_off(const std::string& s) {
  if (s == "on") return true;
  if (s == "off") return false;
  throw pvnext::ConfigError("--imitator must be on or off, got '" + s + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Point cloud video recognition: one-step query pipeline, dense-query baseline, "
               "and instrumented benchmarks"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled dataset (PCV file)");
  std::string synth_out;
  std::string synth_classes = "static,translate_x,translate_y,rotate_z,oscillate_scale,zigzag";
  pvnext::SyntheticSpec spec = pvnext::default_synthetic_spec();
  synth->add_option("--out", synth_out, "Output PCV path")->required();
  synth->add_option("--classes", synth_classes, "Comma-separated motion classes");
  synth->add_option("--n-points", spec.n_points, "Points per frame");
  synth->add_option("--t-frames", spec.t_frames, "Frames per video");
  synth->add_option("--videos-per-class", spec.videos_per_class, "Videos per class");
  synth->add_option("--noise-sigma", spec.noise_sigma, "Per-frame jitter sigma (meters)");
  synth->add_option("--seed", spec.seed, "RNG seed");

  // train
  auto* train = app.add_subcommand("train", "Train a classifier and write checkpoint + CSV");
  pvnext::TrainOptions train_opt;
  std::string train_imitator = "on";
  std::string train_sign = "+1";
  train->add_option("--data", train_opt.data_path, "Input PCV path")->required();
  train->add_option("--out", train_opt.checkpoint_path, "Output checkpoint path")->required();
  train->add_option("--csv", train_opt.csv_path, "Per-epoch metrics CSV path");
  train->add_option("--preset", train_opt.preset, "Model preset: msr | micro");
  train->add_option("--epochs", train_opt.epochs, "Training epochs");
  train->add_option("--batch-size", train_opt.batch_size, "Videos per SGD step");
  train->add_option("--seed", train_opt.seed, "RNG seed (also selects the split)");
  train->add_option("--imitator", train_imitator, "Motion imitator: on | off");
  train->add_option("--motion-sign", train_sign, "Motion sign: +1 | -1");
  train->add_option("--imitator-k", train_opt.imitator_k, "Imitator neighbor count");
  train->add_option("--lr", train_opt.base_lr, "Initial learning rate");
  train->add_option("--momentum", train_opt.momentum, "SGD momentum");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the held-out split");
  pvnext::EvalOptions eval_opt;
  std::string eval_imitator = "on";
  std::string eval_sign = "+1";
  eval->add_option("--data", eval_opt.data_path, "Input PCV path")->required();
  eval->add_option("--checkpoint", eval_opt.checkpoint_path, "Checkpoint path")->required();
  eval->add_option("--csv", eval_opt.csv_path, "Confusion matrix CSV path");
  eval->add_option("--preset", eval_opt.preset, "Model preset: msr | micro");
  eval->add_option("--seed", eval_opt.seed, "Split seed (use the training seed)");
  eval->add_option("--imitator", eval_imitator, "Motion imitator: on | off");
  eval->add_option("--motion-sign", eval_sign, "Motion sign: +1 | -1");
  eval->add_option("--imitator-k", eval_opt.imitator_k, "Imitator neighbor count");
  eval->add_option("--occlude-ratio", eval_opt.occlude_ratio,
                   "Drop-local ratio in (0,1); 0 evaluates clean");
  eval->add_option("--occlude-seed", eval_opt.occlude_seed, "Occlusion RNG seed");

  // imitator-eval
  auto* imit = app.add_subcommand("imitator-eval",
                                  "Chamfer comparison of advected groups vs next frames");
  pvnext::ImitatorEvalOptions imit_opt;
  std::string imit_sign = "+1";
  imit->add_option("--data", imit_opt.data_path, "Input PCV path")->required();
  imit->add_option("--csv", imit_opt.csv_path, "Per-(video,frame) chamfer CSV path");
  imit->add_option("--preset", imit_opt.preset, "Preset whose first stage provides radius/K");
  imit->add_option("--imitator-k", imit_opt.imitator_k, "Imitator neighbor count");
  imit->add_option("--motion-sign", imit_sign, "Motion sign: +1 | -1");
  imit->add_option("--seed", imit_opt.seed, "RNG seed");

  // bench
  auto* bench = app.add_subcommand("bench", "Benchmark one-step vs dense stage pipelines");
  pvnext::BenchOptions bench_opt;
  bench->add_option("--csv", bench_opt.csv_path, "Metrics CSV path");
  bench->add_option("--pipeline", bench_opt.pipeline, "onestep | dense | both");
  bench->add_option("--delta-t", bench_opt.delta_t, "Dense temporal interval");
  bench->add_option("--n-points", bench_opt.n_points, "Points per frame");
  bench->add_option("--t-frames", bench_opt.t_frames, "Frames");
  bench->add_option("--preset", bench_opt.preset, "Model preset: msr | micro");
  bench->add_option("--stage", bench_opt.stage_index, "Stage index to benchmark");
  bench->add_option("--warmups", bench_opt.warmups, "Warmup iterations");
  bench->add_option("--iters", bench_opt.iters, "Timed iterations (median reported)");
  bench->add_option("--threads", bench_opt.threads, "Per-frame encode threads");
  bench->add_option("--seed", bench_opt.seed, "RNG seed");
  bench->add_flag("--zero-motion", bench_opt.zero_motion, "Force zero motion on one-step");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*synth) {
      spec.classes.clear();
      std::size_t start = 0;
      while (start <= synth_classes.size()) {
        const std::size_t comma = synth_classes.find(',', start);
        const std::string name = synth_classes.substr(
            start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!name.empty()) spec.classes.push_back(pvnext::motion_class_from_name(name));
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
      const pvnext::SynthResult res = pvnext::cmd_synth({spec, synth_out});
      std::printf("synth: wrote %zu videos (%zu classes, N=%zu, T=%zu) to %s (%zu bytes)\n",
                  res.num_videos, spec.classes.size(), spec.n_points, spec.t_frames,
                  synth_out.c_str(), res.file_bytes);
    } else if (*train) {
      train_opt.imitator_enabled = parse_on_off(train_imitator);
      train_opt.motion_sign = parse_sign(train_sign);
      const pvnext::TrainResult res = pvnext::cmd_train(train_opt);
      std::printf("train: %zu epochs done, final train loss %.6f, test accuracy %.4f\n",
                  train_opt.epochs, res.final_train_loss, res.final_test_accuracy);
    } else if (*eval) {
      eval_opt.imitator_enabled = parse_on_off(eval_imitator);
      eval_opt.motion_sign = parse_sign(eval_sign);
      const pvnext::EvalReport report = pvnext::cmd_eval(eval_opt);
      std::printf("eval: accuracy %.4f over %zu videos%s\n", report.accuracy,
                  report.indices.size(), eval_opt.occlude_ratio > 0.0 ? " (occluded)" : "");
    } else if (*imit) {
      imit_opt.motion_sign = parse_sign(imit_sign);
      const pvnext::ImitatorEvalResult res = pvnext::cmd_imitator_eval(imit_opt);
      std::printf("imitator-eval: mean chamfer advected %.6g vs baseline %.6g over %zu rows\n",
                  res.mean_chamfer_advected, res.mean_chamfer_baseline, res.rows);
    } else if (*bench) {
      const auto rows = pvnext::cmd_bench(bench_opt);
      for (const pvnext::BenchRow& row : rows) {
        std::printf("bench: %s delta_t=%zu median %.3f ms, %llu ball queries, "
                    "%llu member embeddings, %llu MACs\n",
                    row.pipeline.c_str(), row.delta_t, double(row.wall_ns_median) / 1e6,
                    static_cast<unsigned long long>(row.ball_queries),
                    static_cast<unsigned long long>(row.member_embeddings),
                    static_cast<unsigned long long>(row.multiply_adds_measured));
      }
    }
  } catch (const pvnext::NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 4;
  } catch (const pvnext::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const pvnext::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
