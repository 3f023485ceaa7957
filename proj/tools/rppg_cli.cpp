// rppg: synthetic data, heart-rate pipeline, training, evaluation and
// superpixel throughput benchmarks from one binary.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rppg/bench.hpp"
#include "rppg/config.hpp"
#include "rppg/dataset.hpp"
#include "rppg/error.hpp"
#include "rppg/pipeline.hpp"
#include "rppg/simd/kernels.hpp"
#include "rppg/synth.hpp"

namespace fs = std::filesystem;

namespace {

enum ExitCode { kOk = 0, kUsage = 2, kData = 3, kRuntime = 4 };

std::vector<double> split_numbers(const std::string& text, char sep, const std::string& what) {
  std::vector<double> out;
  std::string item;
  std::istringstream ss(text);
  while (std::getline(ss, item, sep)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw rppg::UsageError("cannot parse " + what + " '" + text + "'");
    }
  }
  return out;
}

rppg::Motion parse_motion(const std::string& text) {
  rppg::Motion m;
  if (text == "none") return m;
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const auto args = colon == std::string::npos ? std::vector<double>{}
                                               : split_numbers(text.substr(colon + 1), ':', "--motion");
  if (kind == "drift" && args.size() == 2) {
    m.kind = rppg::Motion::Kind::drift;
    m.vx = args[0];
    m.vy = args[1];
  } else if (kind == "sway" && args.size() == 2) {
    m.kind = rppg::Motion::Kind::sway;
    m.amplitude_px = args[0];
    m.period_s = args[1];
  } else {
    throw rppg::UsageError("--motion expects none, drift:VX:VY or sway:AMPLITUDE:PERIOD");
  }
  return m;
}

rppg::Occlusion parse_occlusion(const std::string& text) {
  const auto v = split_numbers(text, ':', "--occlude");
  if (v.size() != 6) throw rppg::UsageError("--occlude expects START:END:X:Y:W:H");
  return {v[0], v[1], {v[2], v[3], v[4], v[5]}};
}

void write_text(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw rppg::DataError("cannot write " + path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Face-free video heart-rate estimation with temporal superpixels"};
  app.require_subcommand(0, 1);

  std::string config_file;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed_flag;
  std::optional<int> jobs_flag;
  std::optional<int> k_flag;
  bool dump_config = false;
  app.add_option("--config", config_file, "Config file of 'key = value' lines");
  app.add_option("--set", overrides, "Override one config key (key=value); repeatable");
  app.add_option("--seed", seed_flag, "Seed for every random stream (env RPPG_SEED)");
  app.add_option("--jobs", jobs_flag, "Worker threads (env RPPG_JOBS)");
  app.add_option("--k", k_flag, "Superpixels per frame");
  app.add_flag("--dump-config", dump_config, "Print the resolved config and exit");

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic pulsatile video with ground truth");
  std::string synth_out;
  double synth_bpm = 120.0;
  std::string synth_ramp;
  double synth_duration = 60.0;
  int synth_width = 160;
  int synth_height = 120;
  double synth_fps = 30.0;
  double synth_amplitude = 2.0;
  double synth_noise = 1.0;
  std::string synth_subject = "synth";
  std::string synth_motion = "none";
  std::string synth_shape = "ellipse";
  std::vector<std::string> synth_occlusions;
  synth->add_option("--out", synth_out, "Output frame directory")->required();
  synth->add_option("--bpm", synth_bpm, "Constant heart rate");
  synth->add_option("--bpm-ramp", synth_ramp, "Linear ramp FROM:TO over the whole duration");
  synth->add_option("--duration", synth_duration, "Seconds");
  synth->add_option("--width", synth_width);
  synth->add_option("--height", synth_height);
  synth->add_option("--fps", synth_fps);
  synth->add_option("--amplitude", synth_amplitude, "Peak-to-peak luma modulation (0..255 scale)");
  synth->add_option("--noise", synth_noise, "Per-pixel Gaussian sigma");
  synth->add_option("--subject", synth_subject);
  synth->add_option("--motion", synth_motion, "none | drift:VX:VY | sway:AMPLITUDE:PERIOD");
  synth->add_option("--shape", synth_shape, "ellipse | rectangle");
  synth->add_option("--occlude", synth_occlusions, "START:END:X:Y:W:H; repeatable");

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "Estimate heart rate per map, clip and video");
  std::string pipe_input;
  std::string pipe_mode = "spectral";
  std::string pipe_model;
  std::string pipe_out = "-";
  std::string pipe_maps_dir;
  pipeline->add_option("input", pipe_input, "Frame directory or dataset root")->required();
  pipeline->add_option("--mode", pipe_mode, "spectral | cnn");
  pipeline->add_option("--model", pipe_model, "CNN checkpoint (cnn mode)");
  pipeline->add_option("--out", pipe_out, "Predictions CSV (default stdout)");
  pipeline->add_option("--maps-dir", pipe_maps_dir, "Also write every map as PNG + sidecar here");

  // train
  auto* train = app.add_subcommand("train", "Train the CNN regressor on labeled frame directories");
  std::string train_input;
  std::string train_out;
  std::string train_split;
  std::string train_log;
  train->add_option("input", train_input, "Dataset root")->required();
  train->add_option("--out", train_out, "Checkpoint path")->required();
  train->add_option("--split", train_split, "Split file (train:/test: subject lists)");
  train->add_option("--loss-log", train_log, "Per-epoch loss CSV (default <out>.loss.csv)");

  // eval
  auto* eval = app.add_subcommand("eval", "MAE / RMSE of a predictions file against ground truth");
  std::string eval_pred;
  std::string eval_gt;
  std::string eval_out;
  eval->add_option("predictions", eval_pred, "Predictions CSV")->required();
  eval->add_option("--gt", eval_gt, "Dataset root or frame directory with gt.csv")->required();
  eval->add_option("--out", eval_out, "Write the JSON report here (table always goes to stdout)");

  // bench
  auto* bench = app.add_subcommand("bench", "Superpixel preprocessing throughput");
  std::string bench_input;
  std::vector<std::string> bench_methods{"ibis_warm", "ibis_cold", "grid"};
  int bench_reps = 3;
  std::string bench_out = "-";
  bench->add_option("input", bench_input, "Frame directory")->required();
  bench->add_option("--methods", bench_methods, "ibis_warm, ibis_cold, grid")->delimiter(',');
  bench->add_option("--reps", bench_reps, "Timed repetitions (median reported)");
  bench->add_option("--out", bench_out, "CSV report (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    rppg::PipelineConfig config;
    if (!config_file.empty()) config.apply_file(config_file);
    if (const char* env = std::getenv("RPPG_SEED")) config.set("seed", env);
    if (const char* env = std::getenv("RPPG_JOBS")) config.set("jobs", env);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw rppg::UsageError("--set expects key=value, got '" + kv + "'");
      config.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed_flag) config.set("seed", std::to_string(*seed_flag));
    if (jobs_flag) config.set("jobs", std::to_string(*jobs_flag));
    if (k_flag) config.set("k", std::to_string(*k_flag));
    config.validate();

    if (dump_config) {
      std::cout << config.dump();
      return kOk;
    }

    if (synth->parsed()) {
      rppg::SynthConfig sc;
      sc.width = synth_width;
      sc.height = synth_height;
      sc.fps = synth_fps;
      sc.duration_s = synth_duration;
      if (!synth_ramp.empty()) {
        const auto v = split_numbers(synth_ramp, ':', "--bpm-ramp");
        if (v.size() != 2) throw rppg::UsageError("--bpm-ramp expects FROM:TO");
        sc.bpm = rppg::BpmTrace::ramp(v[0], v[1], synth_duration);
      } else {
        sc.bpm = rppg::BpmTrace::constant(synth_bpm);
      }
      sc.pulse_amplitude = synth_amplitude;
      sc.noise_sigma = synth_noise;
      if (synth_shape == "ellipse") {
        sc.shape = rppg::PatchShape::ellipse;
      } else if (synth_shape == "rectangle") {
        sc.shape = rppg::PatchShape::rectangle;
      } else {
        throw rppg::UsageError("--shape expects ellipse or rectangle");
      }
      sc.patch = {sc.width * 0.25, sc.height * 0.2, sc.width * 0.5, sc.height * 0.6};
      sc.motion = parse_motion(synth_motion);
      for (const auto& o : synth_occlusions) sc.occlusions.push_back(parse_occlusion(o));
      sc.seed = config.seed;
      rppg::write_synthetic(sc, synth_out, synth_subject);
      std::cerr << "wrote " << sc.frame_count() << " frames to " << synth_out << "\n";
      return kOk;
    }

    if (pipeline->parsed()) {
      const rppg::EstimatorMode mode = rppg::parse_mode(pipe_mode);
      std::optional<rppg::CnnModel> model;
      if (mode == rppg::EstimatorMode::cnn) {
        if (pipe_model.empty()) throw rppg::UsageError("--mode cnn requires --model");
        model = rppg::CnnModel::load(pipe_model);
      }
      const rppg::PredictionSet set = rppg::run_pipeline(pipe_input, mode, model ? &*model : nullptr, config);
      write_text(rppg::format_predictions(set), pipe_out);
      if (!pipe_maps_dir.empty()) {
        fs::create_directories(pipe_maps_dir);
        for (const fs::path& dir : rppg::discover_videos(pipe_input)) {
          const rppg::VideoMaps video = rppg::video_to_maps(dir, config);
          for (const auto& clip : video.clips) {
            for (std::size_t j = 0; j < clip.maps.size(); ++j) {
              const std::string stem = video.video_id + "_clip" + std::to_string(clip.range.index) + "_map" +
                                       std::to_string(j);
              rppg::write_map(clip.maps[j], fs::path(pipe_maps_dir) / (stem + ".png"),
                              fs::path(pipe_maps_dir) / (stem + ".json"));
            }
          }
        }
      }
      return kOk;
    }

    if (train->parsed()) {
      std::optional<rppg::SplitSpec> split;
      if (!train_split.empty()) split = rppg::load_split(train_split);
      const rppg::TrainingResult result = rppg::run_training(train_input, config, split);
      result.model.save(train_out);
      std::string log = "epoch,train_mae\n";
      for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%zu,%.6f\n", e + 1, result.epoch_loss[e]);
        log += buf;
      }
      write_text(log, train_log.empty() ? train_out + ".loss.csv" : train_log);
      std::cerr << "trained " << result.model.parameter_count() << " parameters; final train MAE "
                << result.epoch_loss.back() << " bpm\n";
      return kOk;
    }

    if (eval->parsed()) {
      const rppg::MetricReport report = rppg::evaluate_predictions(rppg::read_predictions(eval_pred), eval_gt);
      if (!eval_out.empty()) write_text(rppg::metrics_to_json(report), eval_out);
      std::cout << rppg::metrics_table(report);
      return kOk;
    }

    if (bench->parsed()) {
      const auto rows = rppg::run_bench(bench_input, bench_methods, config, bench_reps);
      write_text(rppg::format_bench(rows), bench_out);
      std::cerr << "simd: " << rppg::simd::isa_name(rppg::simd::kernels().isa) << "\n";
      return kOk;
    }

    std::cerr << app.help();
    return kUsage;
  } catch (const rppg::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const rppg::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
}
