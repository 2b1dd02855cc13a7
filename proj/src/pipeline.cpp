#include "settlemap/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <unordered_map>

#include <json.hpp>

#include "io_util.hpp"
#include "kernel_support.hpp"
#include "settlemap/error.hpp"
#include "settlemap/evaluator.hpp"
#include "settlemap/geojson.hpp"
#include "settlemap/kernels.hpp"
#include "settlemap/rng.hpp"

namespace settlemap {

using nlohmann::ordered_json;

namespace {

fs::path resolve(const fs::path& base, const std::string& value) {
  const fs::path p(value);
  return p.is_absolute() || base.empty() ? p : base / p;
}

void require_file(const fs::path& path, const std::string& what) {
  if (path.empty()) throw Error(ErrorCode::ConfigError, "no " + what + " path configured");
  if (!fs::exists(path)) throw Error(ErrorCode::IoError, what + " not found: " + path.string());
}

template <typename F>
StageResult run_stage(const char* name, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    throw Error(e.code(), std::string(name) + ": " + e.what());
  } catch (const fs::filesystem_error& e) {
    throw Error(ErrorCode::IoError, std::string(name) + ": " + e.what());
  }
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

fs::path prediction_raster(const PipelineConfig& cfg) {
  return cfg.predict_raster.empty() ? cfg.raster : cfg.predict_raster;
}

}  // namespace

void apply_config_json(PipelineConfig& cfg, std::string_view json_text, const fs::path& base_dir) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "config must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    try {
      if (key == "raster") cfg.raster = resolve(base_dir, v.get<std::string>());
      else if (key == "truth") cfg.truth = resolve(base_dir, v.get<std::string>());
      else if (key == "blocks") cfg.blocks = resolve(base_dir, v.get<std::string>());
      else if (key == "predict_raster") cfg.predict_raster = resolve(base_dir, v.get<std::string>());
      else if (key == "score_file") cfg.score_file = resolve(base_dir, v.get<std::string>());
      else if (key == "predicted") cfg.predicted = resolve(base_dir, v.get<std::string>());
      else if (key == "out") cfg.out_dir = resolve(base_dir, v.get<std::string>());
      else if (key == "tile_size") cfg.tiles.tile_size = v.get<int>();
      else if (key == "stride") cfg.tiles.stride = v.get<int>();
      else if (key == "undersample_ratio") cfg.undersample_ratio = v.get<double>();
      else if (key == "val_fraction") cfg.val_fraction = v.get<double>();
      else if (key == "learning_rate") cfg.train.learning_rate = v.get<double>();
      else if (key == "epochs") cfg.train.epochs = v.get<int>();
      else if (key == "batch_size") cfg.train.batch_size = v.get<int>();
      else if (key == "l2") cfg.train.l2 = v.get<double>();
      else if (key == "p_min") cfg.post.p_min = v.get<double>();
      else if (key == "coverage_min") cfg.post.coverage_min = v.get<double>();
      else if (key == "block_filter") cfg.post.block_filter = v.get<bool>();
      else if (key == "coverage_samples") cfg.post.coverage_samples = v.get<int>();
      else if (key == "eval_resolution") cfg.eval_resolution = v.get<int>();
      else if (key == "seed") cfg.seed = v.get<std::uint64_t>();
      else if (key == "threads") cfg.threads = v.get<int>();
      else if (key == "quiet") cfg.quiet = v.get<bool>();
      else throw Error(ErrorCode::ConfigError, "unknown config key '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ConfigError, "config key '" + key + "': " + e.what());
    }
  }
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::ConfigError, "config not found: " + path.string());
  PipelineConfig cfg;
  apply_config_json(cfg, detail::read_file(path), path.parent_path());
  return cfg;
}

void validate(const PipelineConfig& cfg) {
  validate(cfg.tiles);
  validate(cfg.train);
  if (!(cfg.undersample_ratio > 0.0)) throw Error(ErrorCode::ConfigError, "undersample_ratio must be positive");
  if (!(cfg.val_fraction >= 0.0 && cfg.val_fraction < 1.0)) {
    throw Error(ErrorCode::ConfigError, "val_fraction must lie in [0, 1)");
  }
  if (!(cfg.post.p_min >= 0.0 && cfg.post.p_min <= 1.0)) throw Error(ErrorCode::ConfigError, "p_min must lie in [0, 1]");
  if (!(cfg.post.coverage_min >= 0.0)) throw Error(ErrorCode::ConfigError, "coverage_min must be >= 0");
  if (cfg.post.coverage_samples < 256) throw Error(ErrorCode::ConfigError, "coverage_samples must be >= 256");
  if (cfg.eval_resolution < 1) throw Error(ErrorCode::ConfigError, "eval_resolution must be >= 1");
  if (cfg.threads < 0) throw Error(ErrorCode::ConfigError, "threads must be >= 0");
}

OutputLayout output_layout(const fs::path& out) {
  OutputLayout l;
  l.dataset_dir = out / "dataset";
  l.manifest = l.dataset_dir / "manifest.jsonl";
  l.tiles_dir = l.dataset_dir / "tiles";
  l.model_dir = out / "model";
  l.model = l.model_dir / "model.txt";
  l.train_log = l.model_dir / "train_log.tsv";
  l.predict_dir = out / "predict";
  l.predict_manifest = l.predict_dir / "manifest.jsonl";
  l.scores = l.predict_dir / "scores.tsv";
  l.squares = l.predict_dir / "squares.geojson";
  l.postprocess_dir = out / "postprocess";
  l.settlements = l.postprocess_dir / "settlements.geojson";
  l.evaluate_dir = out / "evaluate";
  l.report = l.evaluate_dir / "report.json";
  l.summary = out / "summary.json";
  return l;
}

StageResult cmd_build_dataset(const PipelineConfig& cfg) {
  return run_stage("build-dataset", [&] {
    validate(cfg);
    require_file(cfg.raster, "raster");
    require_file(cfg.truth, "truth polygons");
    const auto layout = output_layout(cfg.out_dir);
    const RasterImage raster = load_raster(cfg.raster);
    const FeatureCollection truth = load_feature_collection(cfg.truth);

    const auto windows = enumerate_windows(raster.width, raster.height, cfg.tiles);
    const auto labeled = label_tiles(windows, raster.transform, truth, cfg.tiles.stride);
    const auto split = split_train_val(labeled, cfg.val_fraction, derive_seed(cfg.seed, "split"));
    std::vector<TileRecord> train;
    for (const auto& r : split) {
      if (r.split == Split::Train) train.push_back(r);
    }
    const auto kept_train =
        undersample_negatives(train, {cfg.undersample_ratio, derive_seed(cfg.seed, "undersample")});
    std::vector<std::uint8_t> keep(split.size(), 0);
    {
      std::unordered_map<std::string, std::size_t> index;
      for (std::size_t k = 0; k < split.size(); ++k) index.emplace(split[k].tile_id, k);
      for (const auto& r : kept_train) keep[index.at(r.tile_id)] = 1;
    }
    std::vector<TileRecord> kept;
    for (std::size_t k = 0; k < split.size(); ++k) {
      if (split[k].split == Split::Val || keep[k]) kept.push_back(split[k]);
    }
    const auto records = augment(kept);

    fs::remove_all(layout.tiles_dir);
    fs::create_directories(layout.tiles_dir);
    const TileStore store(layout.tiles_dir);
    detail::FirstError first;
    const auto n = static_cast<std::ptrdiff_t>(records.size());
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t k = 0; k < n; ++k) {
      const auto& r = records[static_cast<std::size_t>(k)];
      try {
        store.put(r.tile_id, extract_pixels(raster, r.window, r.augmentation));
      } catch (...) {
        first.record(static_cast<std::size_t>(k), std::current_exception());
      }
    }
    first.rethrow();

    TileManifest m;
    m.source = cfg.raster.filename().string();
    m.raster_width = raster.width;
    m.raster_height = raster.height;
    m.tile_size = cfg.tiles.tile_size;
    m.stride = cfg.tiles.stride;
    m.transform = raster.transform;
    m.entries = records;
    write_tile_manifest(m, layout.manifest);

    std::size_t pos = 0, tr_pos = 0, tr_neg = 0, va_pos = 0, va_neg = 0;
    for (const auto& r : labeled) pos += r.label;
    for (const auto& r : kept) {
      if (r.split == Split::Train) (r.label ? tr_pos : tr_neg)++;
      else (r.label ? va_pos : va_neg)++;
    }
    StageResult res;
    res.outputs = {layout.manifest, layout.tiles_dir};
    res.message = "tiles " + std::to_string(labeled.size()) + " (positive " + std::to_string(pos) + ", negative " +
                  std::to_string(labeled.size() - pos) + "); train " + std::to_string(tr_pos) + "+/" +
                  std::to_string(tr_neg) + "- after undersampling, val " + std::to_string(va_pos) + "+/" +
                  std::to_string(va_neg) + "-; " + std::to_string(records.size()) + " records after augmentation";
    return res;
  });
}

namespace {

struct SplitMetrics {
  double loss = 0.0;
  double accuracy = 0.0;
};

SplitMetrics split_metrics(const ModelParams& params, std::span<const FeatureVector> rows,
                           std::span<const std::uint8_t> labels) {
  std::vector<FeatureVector> x;
  x.reserve(rows.size());
  std::size_t correct = 0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    x.push_back(normalize(params, rows[k]));
    correct += (predict_proba(params, rows[k]) >= 0.5) == (labels[k] != 0);
  }
  return {bce_loss_gradient(params.weights, params.bias, x, labels, 0.0).loss,
          static_cast<double>(correct) / static_cast<double>(rows.size())};
}

}  // namespace

StageResult cmd_train(const PipelineConfig& cfg) {
  return run_stage("train", [&] {
    validate(cfg);
    const auto layout = output_layout(cfg.out_dir);
    require_file(layout.manifest, "tile manifest");
    const TileManifest m = load_tile_manifest(layout.manifest);
    if (m.entries.empty()) throw Error(ErrorCode::InvalidArgument, "manifest has no tiles");
    const TileStore store(layout.tiles_dir);

    std::vector<TileRecord> train, val;
    for (const auto& r : m.entries) (r.split == Split::Val ? val : train).push_back(r);
    auto labels_of = [](const std::vector<TileRecord>& rs) {
      std::vector<std::uint8_t> y;
      for (const auto& r : rs) y.push_back(r.label ? 1 : 0);
      return y;
    };
    const auto x_train = kernels::featurize_tiles(train.size(), [&](std::size_t k) { return store.get(train[k]); });
    const auto y_train = labels_of(train);
    TrainConfig tc = cfg.train;
    tc.seed = derive_seed(cfg.seed, "train");
    const TrainResult result = train_sgd(x_train, y_train, tc);

    fs::create_directories(layout.model_dir);
    write_model(result.params, layout.model);
    std::string log = "epoch\tloss\n";
    for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
      log += std::to_string(e + 1) + "\t" + detail::format_roundtrip(result.epoch_loss[e]) + "\n";
    }
    detail::write_file(layout.train_log, log);

    const auto tm = split_metrics(result.params, x_train, y_train);
    std::string msg = "train loss " + fmt("%.4f", tm.loss) + " acc " + fmt("%.4f", tm.accuracy) + " (n=" +
                      std::to_string(train.size()) + ")";
    if (!val.empty()) {
      const auto x_val = kernels::featurize_tiles(val.size(), [&](std::size_t k) { return store.get(val[k]); });
      const auto vm = split_metrics(result.params, x_val, labels_of(val));
      msg += "; val loss " + fmt("%.4f", vm.loss) + " acc " + fmt("%.4f", vm.accuracy) + " (n=" +
             std::to_string(val.size()) + ")";
    } else {
      msg += "; no val tiles";
    }
    return StageResult{{layout.model, layout.train_log}, msg};
  });
}

std::vector<ScoreRow> score_tiles(const ModelParams& model, const RasterImage& raster,
                                  std::span<const TileRecord> records) {
  const auto features = kernels::featurize_tiles(records.size(), [&](std::size_t k) {
    return extract_pixels(raster, records[k].window, records[k].augmentation);
  });
  std::vector<ScoreRow> rows(records.size());
  for (std::size_t k = 0; k < records.size(); ++k) rows[k] = {records[k].tile_id, predict_proba(model, features[k])};
  return rows;
}

std::vector<ScoreRow> match_scores(std::span<const ScoreRow> scores, std::span<const TileRecord> records) {
  std::unordered_map<std::string, double> by_id;
  for (const auto& s : scores) by_id.emplace(s.tile_id, s.probability);
  std::vector<ScoreRow> rows;
  rows.reserve(records.size());
  for (const auto& r : records) {
    const auto it = by_id.find(r.tile_id);
    if (it == by_id.end()) throw Error(ErrorCode::MissingScore, "no score for tile " + r.tile_id);
    rows.push_back({r.tile_id, it->second});
  }
  return rows;
}

std::vector<ScoredSquare> scored_squares(const TileManifest& manifest, std::span<const ScoreRow> scores) {
  std::unordered_map<std::string, double> by_id;
  for (const auto& s : scores) by_id.emplace(s.tile_id, s.probability);
  std::size_t matched = 0;
  std::vector<ScoredSquare> out;
  for (const auto& r : manifest.entries) {
    if (r.augmentation != Augmentation::None) continue;
    const auto it = by_id.find(r.tile_id);
    if (it == by_id.end()) continue;
    ++matched;
    out.push_back({r.tile_id, r.footprint, r.window.col_off / manifest.stride, r.window.row_off / manifest.stride,
                   it->second});
  }
  if (matched != by_id.size()) {
    for (const auto& s : scores) {
      const bool known = std::any_of(out.begin(), out.end(), [&](const ScoredSquare& q) { return q.tile_id == s.tile_id; });
      if (!known) throw Error(ErrorCode::MissingTile, "scored tile " + s.tile_id + " is not in the manifest");
    }
  }
  return out;
}

FeatureCollection squares_to_features(std::span<const ScoredSquare> squares, const std::string& crs) {
  FeatureCollection fc;
  fc.crs = crs;
  for (const auto& s : squares) {
    Feature f;
    f.geometry.parts.push_back(to_polygon(s.footprint));
    f.properties.set("tile_id", s.tile_id);
    f.properties.set("grid_i", s.grid_i);
    f.properties.set("grid_j", s.grid_j);
    f.properties.set("probability", s.probability);
    fc.features.push_back(std::move(f));
  }
  return fc;
}

StageResult cmd_predict(const PipelineConfig& cfg) {
  return run_stage("predict", [&] {
    validate(cfg);
    const auto layout = output_layout(cfg.out_dir);
    const fs::path raster_path = prediction_raster(cfg);
    require_file(raster_path, "prediction raster");
    if (cfg.score_file.empty()) {
      require_file(layout.model, "model");
    } else {
      require_file(cfg.score_file, "score file");
    }
    const RasterImage raster = load_raster(raster_path);
    const auto windows = enumerate_windows(raster.width, raster.height, cfg.tiles);
    const auto records = unlabeled_tiles(windows, raster.transform, cfg.tiles.stride);
    const auto scores = cfg.score_file.empty() ? score_tiles(load_model(layout.model), raster, records)
                                               : match_scores(load_score_file(cfg.score_file), records);

    TileManifest m;
    m.source = raster_path.filename().string();
    m.raster_width = raster.width;
    m.raster_height = raster.height;
    m.tile_size = cfg.tiles.tile_size;
    m.stride = cfg.tiles.stride;
    m.transform = raster.transform;
    m.entries = records;
    fs::create_directories(layout.predict_dir);
    write_tile_manifest(m, layout.predict_manifest);
    write_score_file(scores, layout.scores);
    write_feature_collection(squares_to_features(scored_squares(m, scores), raster.transform.crs), layout.squares);

    const auto above = std::count_if(scores.begin(), scores.end(), [&](const ScoreRow& s) {
      return s.probability >= cfg.post.p_min;
    });
    return StageResult{{layout.predict_manifest, layout.scores, layout.squares},
                       "scored " + std::to_string(scores.size()) + " tiles, " + std::to_string(above) +
                           " at or above p_min"};
  });
}

StageResult cmd_postprocess(const PipelineConfig& cfg) {
  return run_stage("postprocess", [&] {
    validate(cfg);
    const auto layout = output_layout(cfg.out_dir);
    if (cfg.post.block_filter) require_file(cfg.blocks, "blocks");
    require_file(layout.predict_manifest, "prediction manifest");
    const fs::path score_path = cfg.score_file.empty() ? layout.scores : cfg.score_file;
    require_file(score_path, "score file");

    const TileManifest m = load_tile_manifest(layout.predict_manifest);
    const auto squares = scored_squares(m, load_score_file(score_path));
    const SquareGrid grid = square_grid(m.transform, m.tile_size, m.stride);
    FeatureCollection blocks;
    if (cfg.post.block_filter) blocks = load_feature_collection(cfg.blocks);
    const auto fc = run_postprocess(squares, grid, m.transform.crs, cfg.post,
                                    cfg.post.block_filter ? &blocks : nullptr);
    fs::create_directories(layout.postprocess_dir);
    write_feature_collection(fc, layout.settlements);
    return StageResult{{layout.settlements},
                       std::to_string(fc.features.size()) + (cfg.post.block_filter ? " blocks" : " regions") +
                           " from " + std::to_string(squares.size()) + " squares"};
  });
}

StageResult cmd_evaluate(const PipelineConfig& cfg) {
  return run_stage("evaluate", [&] {
    validate(cfg);
    const auto layout = output_layout(cfg.out_dir);
    const fs::path predicted_path = cfg.predicted.empty() ? layout.settlements : cfg.predicted;
    const fs::path raster_path = prediction_raster(cfg);
    require_file(predicted_path, "predicted polygons");
    require_file(cfg.truth, "truth polygons");
    require_file(raster_path, "evaluation raster");
    const RasterImage raster = load_raster(raster_path);
    const auto report = evaluate(load_feature_collection(predicted_path), load_feature_collection(cfg.truth),
                                 raster.transform, raster.width, raster.height, cfg.eval_resolution);
    fs::create_directories(layout.evaluate_dir);
    write_eval_report(report, layout.report);
    std::string msg = describe_eval_report(report);
    if (!msg.empty() && msg.back() == '\n') msg.pop_back();
    return StageResult{{layout.report}, msg};
  });
}

StageResult cmd_run_all(const PipelineConfig& cfg) {
  validate(cfg);
  const auto layout = output_layout(cfg.out_dir);
  const std::vector<fs::path> stage_dirs = {layout.dataset_dir, layout.model_dir, layout.predict_dir,
                                            layout.postprocess_dir, layout.evaluate_dir};
  std::vector<fs::path> created;
  for (const auto& d : stage_dirs) {
    if (!fs::exists(d)) created.push_back(d);
  }
  const bool out_existed = fs::exists(cfg.out_dir);

  using Stage = StageResult (*)(const PipelineConfig&);
  const std::pair<const char*, Stage> stages[] = {{"build-dataset", cmd_build_dataset},
                                                  {"train", cmd_train},
                                                  {"predict", cmd_predict},
                                                  {"postprocess", cmd_postprocess},
                                                  {"evaluate", cmd_evaluate}};
  ordered_json summary;
  summary["seed"] = cfg.seed;
  summary["stages"] = ordered_json::array();
  StageResult all;
  try {
    for (const auto& [name, fn] : stages) {
      StageResult r = fn(cfg);
      ordered_json outs = ordered_json::array();
      for (const auto& p : r.outputs) outs.push_back(fs::relative(p, cfg.out_dir).generic_string());
      summary["stages"].push_back({{"stage", name}, {"outputs", outs}, {"message", r.message}});
      all.outputs.insert(all.outputs.end(), r.outputs.begin(), r.outputs.end());
      all.message += std::string(name) + ": " + r.message + "\n";
    }
  } catch (...) {
    std::error_code ec;
    for (const auto& d : created) fs::remove_all(d, ec);
    if (!out_existed) fs::remove_all(cfg.out_dir, ec);
    throw;
  }
  const auto report = nlohmann::json::parse(detail::read_file(layout.report));
  summary["kappa"] = report.at("kappa").get<double>();
  detail::write_file(layout.summary, summary.dump(2) + "\n");
  all.outputs.push_back(layout.summary);
  if (!all.message.empty()) all.message.pop_back();
  return all;
}

StageResult cmd_synth(const SynthSpec& spec, const fs::path& out_dir) {
  return run_stage("synth", [&] {
    const SynthScene scene = generate_synth(spec);
    fs::create_directories(out_dir);
    TiffWriteOptions opts;
    opts.deflate = true;
    opts.horizontal_predictor = true;
    const fs::path image = out_dir / "image.tif", truth = out_dir / "truth.geojson",
                   blocks = out_dir / "blocks.geojson", config = out_dir / "pipeline.json";
    write_geotiff(scene.image, image, opts);
    write_feature_collection(scene.truth, truth);
    write_feature_collection(scene.blocks, blocks);

    const int tile = std::max(16, spec.block_pitch / 4);
    ordered_json j;
    j["raster"] = "image.tif";
    j["truth"] = "truth.geojson";
    j["blocks"] = "blocks.geojson";
    j["out"] = "run";
    j["tile_size"] = tile;
    j["stride"] = tile / 2;
    j["block_filter"] = true;
    j["seed"] = spec.seed;
    detail::write_file(config, j.dump(2) + "\n");
    return StageResult{{image, truth, blocks, config},
                       std::to_string(spec.width) + "x" + std::to_string(spec.height) + " scene, " +
                           std::to_string(scene.truth.features.size()) + " patches, " +
                           std::to_string(scene.blocks.features.size()) + " blocks"};
  });
}

}  // namespace settlemap
