#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "settlemap/classifier.hpp"
#include "settlemap/dataset.hpp"
#include "settlemap/manifest.hpp"
#include "settlemap/postprocess.hpp"
#include "settlemap/raster.hpp"
#include "settlemap/synth.hpp"

namespace settlemap {

namespace fs = std::filesystem;

struct PipelineConfig {
  fs::path raster;          // training image
  fs::path truth;           // settlement polygons
  fs::path blocks;          // city blocks, needed when block_filter is on
  fs::path predict_raster;  // image to map; defaults to `raster`
  fs::path score_file;      // external scores used instead of a model
  fs::path predicted;       // map to evaluate; defaults to the postprocess output
  fs::path out_dir = "out";
  TileSpec tiles;
  double undersample_ratio = 4.0;
  double val_fraction = 0.2;
  TrainConfig train;
  PostprocessConfig post;
  int eval_resolution = 1;
  std::uint64_t seed = 0;
  int threads = 0;
  bool quiet = false;
};

// JSON object; relative paths resolve against the file's directory.
// Unknown keys are a ConfigError.
PipelineConfig load_pipeline_config(const fs::path& path);
void apply_config_json(PipelineConfig& cfg, std::string_view json_text, const fs::path& base_dir);
void validate(const PipelineConfig& cfg);

// Stage output locations under cfg.out_dir.
struct OutputLayout {
  fs::path dataset_dir, manifest, tiles_dir;
  fs::path model_dir, model, train_log;
  fs::path predict_dir, predict_manifest, scores, squares;
  fs::path postprocess_dir, settlements;
  fs::path evaluate_dir, report;
  fs::path summary;
};
OutputLayout output_layout(const fs::path& out_dir);

struct StageResult {
  std::vector<fs::path> outputs;
  std::string message;  // human-readable summary
};

StageResult cmd_build_dataset(const PipelineConfig& cfg);
StageResult cmd_train(const PipelineConfig& cfg);
StageResult cmd_predict(const PipelineConfig& cfg);
StageResult cmd_postprocess(const PipelineConfig& cfg);
StageResult cmd_evaluate(const PipelineConfig& cfg);
StageResult cmd_run_all(const PipelineConfig& cfg);

// Writes image.tif, truth.geojson, blocks.geojson and a pipeline.json sized
// to the scene (tile = pitch / 4, stride = tile / 2, block filtering on).
StageResult cmd_synth(const SynthSpec& spec, const fs::path& out_dir);

// Tile scores from a model over an unlabeled manifest.
std::vector<ScoreRow> score_tiles(const ModelParams& model, const RasterImage& raster,
                                  std::span<const TileRecord> records);
// Looks every record up in external scores; throws MissingScore.
std::vector<ScoreRow> match_scores(std::span<const ScoreRow> scores, std::span<const TileRecord> records);

// Joins scores to manifest windows; throws MissingTile for unknown ids.
std::vector<ScoredSquare> scored_squares(const TileManifest& manifest, std::span<const ScoreRow> scores);
FeatureCollection squares_to_features(std::span<const ScoredSquare> squares, const std::string& crs);

}  // namespace settlemap
