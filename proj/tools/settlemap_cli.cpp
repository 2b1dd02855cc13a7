#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <utility>

#include "settlemap/error.hpp"
#include "settlemap/kernels.hpp"
#include "settlemap/pipeline.hpp"

using namespace settlemap;

namespace {

// Values given on the command line; unset ones leave config/defaults alone.
struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
  bool quiet = false;
  std::optional<int> tile_size, stride, eval_resolution, epochs;
  std::optional<double> undersample_ratio, p_min, coverage_min, val_fraction, learning_rate;
  std::optional<bool> block_filter;
  std::optional<std::string> raster, truth, blocks, predict_raster, scores, predicted;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "pipeline configuration (JSON)");
  cmd->add_option("--seed", o.seed, "top-level seed");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--threads", o.threads, "worker threads, 0 = auto")->check(CLI::NonNegativeNumber);
  cmd->add_flag("--quiet", o.quiet, "print nothing on success");
}

void add_stage_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--tile-size", o.tile_size, "tile edge in pixels");
  cmd->add_option("--stride", o.stride, "window stride in pixels");
  cmd->add_option("--undersample-ratio", o.undersample_ratio, "negatives kept per positive");
  cmd->add_option("--val-fraction", o.val_fraction, "share of each class held out");
  cmd->add_option("--epochs", o.epochs, "SGD epochs");
  cmd->add_option("--learning-rate", o.learning_rate, "SGD step size");
  cmd->add_option("--p-min", o.p_min, "median-filter survival threshold");
  cmd->add_option("--coverage-min", o.coverage_min, "block coverage threshold");
  cmd->add_option("--block-filter", o.block_filter, "snap predictions to blocks (true/false)");
  cmd->add_option("--eval-resolution", o.eval_resolution, "source pixels per evaluation pixel");
  cmd->add_option("--raster", o.raster, "training raster");
  cmd->add_option("--truth", o.truth, "truth polygons (GeoJSON)");
  cmd->add_option("--blocks", o.blocks, "block polygons (GeoJSON)");
  cmd->add_option("--predict-raster", o.predict_raster, "raster to map (defaults to --raster)");
  cmd->add_option("--scores", o.scores, "external score file used instead of the model");
  cmd->add_option("--predicted", o.predicted, "polygons to evaluate");
}

PipelineConfig resolve_config(const Overrides& o) {
  PipelineConfig cfg = o.config.empty() ? PipelineConfig{} : load_pipeline_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.out) cfg.out_dir = *o.out;
  if (o.threads) cfg.threads = *o.threads;
  if (o.quiet) cfg.quiet = true;
  if (o.tile_size) cfg.tiles.tile_size = *o.tile_size;
  if (o.stride) cfg.tiles.stride = *o.stride;
  if (o.undersample_ratio) cfg.undersample_ratio = *o.undersample_ratio;
  if (o.val_fraction) cfg.val_fraction = *o.val_fraction;
  if (o.epochs) cfg.train.epochs = *o.epochs;
  if (o.learning_rate) cfg.train.learning_rate = *o.learning_rate;
  if (o.p_min) cfg.post.p_min = *o.p_min;
  if (o.coverage_min) cfg.post.coverage_min = *o.coverage_min;
  if (o.block_filter) cfg.post.block_filter = *o.block_filter;
  if (o.eval_resolution) cfg.eval_resolution = *o.eval_resolution;
  if (o.raster) cfg.raster = *o.raster;
  if (o.truth) cfg.truth = *o.truth;
  if (o.blocks) cfg.blocks = *o.blocks;
  if (o.predict_raster) cfg.predict_raster = *o.predict_raster;
  if (o.scores) cfg.score_file = *o.scores;
  if (o.predicted) cfg.predicted = *o.predicted;
  return cfg;
}

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"settlemap: tile classification pipeline for settlement mapping"};
  app.require_subcommand(1);
  Overrides o;

  std::string stage;
  const std::pair<const char*, const char*> stages[] = {
      {"build-dataset", "cut, label, split, balance and augment training tiles"},
      {"train", "fit the tile classifier"},
      {"predict", "score every tile of the prediction raster"},
      {"postprocess", "filter and merge scored squares into settlement polygons"},
      {"evaluate", "pixel-level kappa of a map against truth"},
      {"run-all", "every stage in order"},
  };
  for (const auto& [name, help] : stages) {
    auto* cmd = app.add_subcommand(name, help);
    add_common(cmd, o);
    add_stage_flags(cmd, o);
    cmd->callback([&stage, name] { stage = name; });
  }

  SynthSpec synth;
  std::optional<int> synth_size;
  std::string synth_out = "synth";
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic city scene");
  synth_cmd->add_option("--size", synth_size, "square raster edge in pixels");
  synth_cmd->add_option("--width", synth.width, "raster width");
  synth_cmd->add_option("--height", synth.height, "raster height");
  synth_cmd->add_option("--patches", synth.patches, "settlement patch count");
  synth_cmd->add_option("--contrast", synth.contrast, "speckle contrast");
  synth_cmd->add_option("--seed", synth.seed, "seed");
  synth_cmd->add_option("--out", synth_out, "output directory");
  synth_cmd->add_option("--threads", o.threads, "ignored; accepted for symmetry")->check(CLI::NonNegativeNumber);
  synth_cmd->add_flag("--quiet", o.quiet, "print nothing on success");
  synth_cmd->callback([&stage] { stage = "synth"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error[UsageError] %s\n", one_line(e.what()).c_str());
    return 2;
  }

  try {
    StageResult result;
    bool quiet = o.quiet;
    if (stage == "synth") {
      if (synth_size) synth.width = synth.height = *synth_size;
      result = cmd_synth(synth, synth_out);
    } else {
      const PipelineConfig cfg = resolve_config(o);
      quiet = cfg.quiet;
      kernels::set_thread_count(cfg.threads);
      if (stage == "build-dataset") result = cmd_build_dataset(cfg);
      else if (stage == "train") result = cmd_train(cfg);
      else if (stage == "predict") result = cmd_predict(cfg);
      else if (stage == "postprocess") result = cmd_postprocess(cfg);
      else if (stage == "evaluate") result = cmd_evaluate(cfg);
      else result = cmd_run_all(cfg);
    }
    if (!quiet) {
      std::cout << result.message << "\n";
      for (const auto& p : result.outputs) std::cout << "wrote " << p.string() << "\n";
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error[%s] %s\n", std::string(to_string(e.code())).c_str(), one_line(e.what()).c_str());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error[Internal] %s\n", one_line(e.what()).c_str());
    return 3;
  }
  return 0;
}
