#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "settlemap/geo_core.hpp"
#include "settlemap/geojson.hpp"

namespace settlemap {

struct ConfusionMatrix {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::uint64_t total() const { return tp + fp + fn + tn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

// Rasterizes both collections with the pixel-centre rule on one grid.
ConfusionMatrix confusion_counts(const FeatureCollection& predicted, const FeatureCollection& truth,
                                 const GeoTransform& t, int width, int height);

// Exact rational evaluation; p_e = 1 gives 1 when p_o = 1, else 0.
double cohens_kappa(const ConfusionMatrix& cm);
bool kappa_degenerate(const ConfusionMatrix& cm);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::vector<std::string> flags;  // which values were undefined and set to 0
};

PrecisionRecall precision_recall_f1(const ConfusionMatrix& cm);

struct EvalReport {
  ConfusionMatrix confusion;
  double kappa = 0.0;
  PrecisionRecall rates;
  std::vector<std::string> flags;
  int eval_resolution = 1;  // source pixels per evaluation pixel along each axis
  int grid_width = 0;
  int grid_height = 0;
  double pixel_w = 0.0;
  double pixel_h = 0.0;
  RectFootprint aoi;
  std::string crs;
};

// Evaluation grid: the source grid coarsened by `resolution`, covering the
// whole source extent (the last row/column may overhang).
EvalReport evaluate(const FeatureCollection& predicted, const FeatureCollection& truth, const GeoTransform& t,
                    int width, int height, int resolution = 1);

std::string format_eval_report(const EvalReport& r);
std::string describe_eval_report(const EvalReport& r);
void write_eval_report(const EvalReport& r, const std::filesystem::path& path);

}  // namespace settlemap
