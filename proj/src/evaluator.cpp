#include "settlemap/evaluator.hpp"

#include <cstdio>
#include <numeric>

#include <json.hpp>

#include "io_util.hpp"
#include "settlemap/error.hpp"
#include "settlemap/kernels.hpp"

namespace settlemap {

ConfusionMatrix confusion_counts(const FeatureCollection& predicted, const FeatureCollection& truth,
                                 const GeoTransform& t, int width, int height) {
  if (!crs_compatible(t.crs, predicted.crs)) {
    throw Error(ErrorCode::CrsMismatch, "predictions are in " + predicted.crs + ", raster is in " + t.crs);
  }
  if (!crs_compatible(t.crs, truth.crs)) {
    throw Error(ErrorCode::CrsMismatch, "truth is in " + truth.crs + ", raster is in " + t.crs);
  }
  const BitMask p = kernels::rasterize(merged_geometry(predicted), t, width, height);
  const BitMask g = kernels::rasterize(merged_geometry(truth), t, width, height);
  ConfusionMatrix cm;
  const auto n = static_cast<std::ptrdiff_t>(p.bits.size());
  std::uint64_t tp = 0, fp = 0, fn = 0;
#pragma omp parallel for reduction(+ : tp, fp, fn) schedule(static)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const bool a = p.bits[static_cast<std::size_t>(k)] != 0;
    const bool b = g.bits[static_cast<std::size_t>(k)] != 0;
    tp += a && b;
    fp += a && !b;
    fn += !a && b;
  }
  cm.tp = tp;
  cm.fp = fp;
  cm.fn = fn;
  cm.tn = static_cast<std::uint64_t>(n) - tp - fp - fn;
  return cm;
}

namespace {

using i128 = __int128;

struct KappaTerms {
  i128 num;
  i128 den;
};

// kappa = (n (tp + tn) - M) / (n^2 - M), M = sum of marginal products.
KappaTerms kappa_terms(const ConfusionMatrix& cm) {
  const i128 tp = cm.tp, fp = cm.fp, fn = cm.fn, tn = cm.tn;
  const i128 n = tp + fp + fn + tn;
  const i128 m = (tp + fp) * (tp + fn) + (fn + tn) * (fp + tn);
  return {n * (tp + tn) - m, n * n - m};
}

i128 gcd128(i128 a, i128 b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    const i128 r = a % b;
    a = b;
    b = r;
  }
  return a;
}

}  // namespace

bool kappa_degenerate(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw Error(ErrorCode::EmptyMatrix, "confusion matrix is empty");
  return kappa_terms(cm).den == 0;
}

double cohens_kappa(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw Error(ErrorCode::EmptyMatrix, "confusion matrix is empty");
  auto [num, den] = kappa_terms(cm);
  if (den == 0) return cm.fp == 0 && cm.fn == 0 ? 1.0 : 0.0;
  const i128 g = gcd128(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

PrecisionRecall precision_recall_f1(const ConfusionMatrix& cm) {
  PrecisionRecall r;
  const auto ratio = [](std::uint64_t a, std::uint64_t b) { return static_cast<double>(a) / static_cast<double>(b); };
  if (cm.tp + cm.fp > 0) {
    r.precision = ratio(cm.tp, cm.tp + cm.fp);
  } else {
    r.flags.push_back("precision_undefined");
  }
  if (cm.tp + cm.fn > 0) {
    r.recall = ratio(cm.tp, cm.tp + cm.fn);
  } else {
    r.flags.push_back("recall_undefined");
  }
  if (r.precision + r.recall > 0.0) {
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  } else {
    r.flags.push_back("f1_undefined");
  }
  return r;
}

EvalReport evaluate(const FeatureCollection& predicted, const FeatureCollection& truth, const GeoTransform& t,
                    int width, int height, int resolution) {
  validate(t);
  if (resolution < 1) throw Error(ErrorCode::InvalidArgument, "eval resolution must be >= 1");
  if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidArgument, "evaluation grid is empty");
  EvalReport r;
  r.eval_resolution = resolution;
  r.grid_width = (width + resolution - 1) / resolution;
  r.grid_height = (height + resolution - 1) / resolution;
  GeoTransform eval = t;
  eval.pixel_w = t.pixel_w * resolution;
  eval.pixel_h = t.pixel_h * resolution;
  r.pixel_w = eval.pixel_w;
  r.pixel_h = eval.pixel_h;
  r.aoi = window_footprint(t, {0, 0, width, height});
  r.crs = t.crs;
  r.confusion = confusion_counts(predicted, truth, eval, r.grid_width, r.grid_height);
  r.kappa = cohens_kappa(r.confusion);
  if (kappa_degenerate(r.confusion)) r.flags.push_back("kappa_degenerate_marginals");
  r.rates = precision_recall_f1(r.confusion);
  r.flags.insert(r.flags.end(), r.rates.flags.begin(), r.rates.flags.end());
  return r;
}

std::string format_eval_report(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["confusion"] = {{"tp", r.confusion.tp}, {"fp", r.confusion.fp}, {"fn", r.confusion.fn}, {"tn", r.confusion.tn}};
  j["kappa"] = r.kappa;
  j["precision"] = r.rates.precision;
  j["recall"] = r.rates.recall;
  j["f1"] = r.rates.f1;
  j["flags"] = r.flags;
  j["eval_resolution"] = r.eval_resolution;
  j["grid"] = {{"width", r.grid_width}, {"height", r.grid_height}, {"pixel_w", r.pixel_w}, {"pixel_h", r.pixel_h}};
  j["aoi"] = {{"min_x", r.aoi.min_x}, {"min_y", r.aoi.min_y}, {"max_x", r.aoi.max_x}, {"max_y", r.aoi.max_y},
              {"crs", r.crs}};
  return j.dump(2) + "\n";
}

std::string describe_eval_report(const EvalReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "kappa %.4f  precision %.4f  recall %.4f  f1 %.4f\n"
                "tp %llu  fp %llu  fn %llu  tn %llu  (%dx%d grid, %d px per cell)\n",
                r.kappa, r.rates.precision, r.rates.recall, r.rates.f1,
                static_cast<unsigned long long>(r.confusion.tp), static_cast<unsigned long long>(r.confusion.fp),
                static_cast<unsigned long long>(r.confusion.fn), static_cast<unsigned long long>(r.confusion.tn),
                r.grid_width, r.grid_height, r.eval_resolution);
  std::string out = buf;
  for (const auto& f : r.flags) out += "flag: " + f + "\n";
  return out;
}

void write_eval_report(const EvalReport& r, const std::filesystem::path& path) {
  detail::write_file(path, format_eval_report(r));
}

}  // namespace settlemap
