#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "settlemap/tile.hpp"

namespace settlemap {

inline constexpr std::size_t kFeatureCount = 17;

// mean[3] std[3] edge[3] hist[8], all from samples scaled to [0,1].
// edge = mean |horizontal difference| + mean |vertical difference| per band.
// Histogram bins use integer luma 299R + 587G + 114B over 8 equal bins, so a
// value on a bin edge goes to the upper bin and 1.0 lands in the last one.
using FeatureVector = std::array<double, kFeatureCount>;

FeatureVector featurize(const TilePixels& tile);

struct ModelParams {
  std::array<double, kFeatureCount> weights{};
  double bias = 0.0;
  std::array<double, kFeatureCount> feature_mean{};
  std::array<double, kFeatureCount> feature_std = [] {
    std::array<double, kFeatureCount> s{};
    s.fill(1.0);
    return s;
  }();

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 200;
  int batch_size = 32;
  std::uint64_t seed = 0;
  double l2 = 1e-4;
};

void validate(const TrainConfig& cfg);

struct TrainResult {
  ModelParams params;
  std::vector<double> epoch_loss;  // full-set objective after each epoch
};

// z-score statistics over the rows; zero-variance dimensions get std 1.
void fit_normalization(std::span<const FeatureVector> rows, ModelParams& params);
FeatureVector normalize(const ModelParams& params, const FeatureVector& f);

struct LossGradient {
  double loss = 0.0;
  std::array<double, kFeatureCount> grad_w{};
  double grad_b = 0.0;
};

// Mean binary cross-entropy of sigmoid(w.x + b) plus l2 * |w|^2 over
// already-normalized rows, with its analytic gradient.
LossGradient bce_loss_gradient(const std::array<double, kFeatureCount>& weights, double bias,
                               std::span<const FeatureVector> normalized_rows, std::span<const std::uint8_t> labels,
                               double l2);

// Mini-batch SGD; rows are shuffled every epoch from cfg.seed.
TrainResult train_sgd(std::span<const FeatureVector> rows, std::span<const std::uint8_t> labels,
                      const TrainConfig& cfg);

double sigmoid(double z);
double predict_proba(const ModelParams& params, const FeatureVector& f);

void write_model(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_model(const std::filesystem::path& path);

struct ScoreRow {
  std::string tile_id;
  double probability = 0.0;
  friend bool operator==(const ScoreRow&, const ScoreRow&) = default;
};

// One "tile_id<TAB>probability" line per tile.
std::vector<ScoreRow> load_score_file(const std::filesystem::path& path);
void write_score_file(std::span<const ScoreRow> rows, const std::filesystem::path& path);

}  // namespace settlemap
