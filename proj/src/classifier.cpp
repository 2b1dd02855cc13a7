#include "settlemap/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "io_util.hpp"
#include "settlemap/error.hpp"
#include "settlemap/rng.hpp"

namespace settlemap {

FeatureVector featurize(const TilePixels& tile) {
  if (tile.width < 2 || tile.height < 2) {
    throw Error(ErrorCode::TileTooSmall, "featurize needs at least a 2x2 tile");
  }
  const int w = tile.width;
  const int h = tile.height;
  // Integer accumulators keep every feature independent of visiting order,
  // which is what makes them exactly flip-invariant.
  std::array<std::int64_t, 3> sum{}, sumsq{}, hdiff{}, vdiff{};
  std::array<std::int64_t, 8> hist{};
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::uint8_t* p = tile.px(c, r);
      for (int b = 0; b < 3; ++b) {
        sum[b] += p[b];
        sumsq[b] += static_cast<std::int64_t>(p[b]) * p[b];
        if (c + 1 < w) hdiff[b] += std::abs(static_cast<int>(tile.px(c + 1, r)[b]) - p[b]);
        if (r + 1 < h) vdiff[b] += std::abs(static_cast<int>(tile.px(c, r + 1)[b]) - p[b]);
      }
      const std::int64_t luma = 299 * p[0] + 587 * p[1] + 114 * p[2];
      hist[static_cast<std::size_t>(std::min<std::int64_t>(7, luma * 8 / 255000))] += 1;
    }
  }
  const auto n = static_cast<std::int64_t>(w) * h;
  const double nd = static_cast<double>(n);
  FeatureVector f{};
  for (int b = 0; b < 3; ++b) {
    f[b] = static_cast<double>(sum[b]) / (nd * 255.0);
    const std::int64_t var_num = n * sumsq[b] - sum[b] * sum[b];
    f[3 + b] = std::sqrt(static_cast<double>(std::max<std::int64_t>(0, var_num))) / (nd * 255.0);
    f[6 + b] = static_cast<double>(hdiff[b]) / (static_cast<double>(h) * (w - 1) * 255.0) +
               static_cast<double>(vdiff[b]) / (static_cast<double>(h - 1) * w * 255.0);
  }
  for (std::size_t k = 0; k < 8; ++k) f[9 + k] = static_cast<double>(hist[k]) / nd;
  return f;
}

void validate(const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0.0) || cfg.epochs < 1 || cfg.batch_size < 1 || !(cfg.l2 >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "training needs learning_rate > 0, epochs >= 1, batch_size >= 1, l2 >= 0");
  }
}

void fit_normalization(std::span<const FeatureVector> rows, ModelParams& params) {
  params.feature_mean.fill(0.0);
  params.feature_std.fill(1.0);
  if (rows.empty()) return;
  const double n = static_cast<double>(rows.size());
  for (std::size_t d = 0; d < kFeatureCount; ++d) {
    double mean = 0.0;
    for (const auto& r : rows) mean += r[d];
    mean /= n;
    double var = 0.0;
    for (const auto& r : rows) var += (r[d] - mean) * (r[d] - mean);
    const double sd = std::sqrt(var / n);
    params.feature_mean[d] = mean;
    params.feature_std[d] = sd > 0.0 ? sd : 1.0;
  }
}

FeatureVector normalize(const ModelParams& params, const FeatureVector& f) {
  FeatureVector out{};
  for (std::size_t d = 0; d < kFeatureCount; ++d) out[d] = (f[d] - params.feature_mean[d]) / params.feature_std[d];
  return out;
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

// log(1 + e^z) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double linear(const std::array<double, kFeatureCount>& w, double b, const FeatureVector& x) {
  double z = b;
  for (std::size_t d = 0; d < kFeatureCount; ++d) z += w[d] * x[d];
  return z;
}

}  // namespace

LossGradient bce_loss_gradient(const std::array<double, kFeatureCount>& weights, double bias,
                               std::span<const FeatureVector> normalized_rows, std::span<const std::uint8_t> labels,
                               double l2) {
  LossGradient out;
  const std::size_t n = normalized_rows.size();
  if (n == 0) return out;
  for (std::size_t k = 0; k < n; ++k) {
    const double z = linear(weights, bias, normalized_rows[k]);
    const double y = labels[k] ? 1.0 : 0.0;
    out.loss += softplus(z) - y * z;
    const double residual = sigmoid(z) - y;
    for (std::size_t d = 0; d < kFeatureCount; ++d) out.grad_w[d] += residual * normalized_rows[k][d];
    out.grad_b += residual;
  }
  const double inv = 1.0 / static_cast<double>(n);
  out.loss *= inv;
  out.grad_b *= inv;
  for (std::size_t d = 0; d < kFeatureCount; ++d) {
    out.loss += l2 * weights[d] * weights[d];
    out.grad_w[d] = out.grad_w[d] * inv + 2.0 * l2 * weights[d];
  }
  return out;
}

TrainResult train_sgd(std::span<const FeatureVector> rows, std::span<const std::uint8_t> labels,
                      const TrainConfig& cfg) {
  validate(cfg);
  if (rows.size() != labels.size()) throw Error(ErrorCode::InvalidArgument, "rows and labels differ in length");
  const auto positives = std::count_if(labels.begin(), labels.end(), [](std::uint8_t v) { return v != 0; });
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(labels.size())) {
    throw Error(ErrorCode::SingleClassDataset, "training data must contain both classes");
  }

  TrainResult result;
  ModelParams& params = result.params;
  fit_normalization(rows, params);
  std::vector<FeatureVector> x;
  x.reserve(rows.size());
  for (const auto& r : rows) x.push_back(normalize(params, r));
  const std::vector<std::uint8_t> y(labels.begin(), labels.end());

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(x.size());
  std::vector<FeatureVector> bx;
  std::vector<std::uint8_t> by;
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  result.epoch_loss.reserve(static_cast<std::size_t>(cfg.epochs));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      bx.clear();
      by.clear();
      for (std::size_t k = start; k < end; ++k) {
        bx.push_back(x[order[k]]);
        by.push_back(y[order[k]]);
      }
      const auto g = bce_loss_gradient(params.weights, params.bias, bx, by, cfg.l2);
      for (std::size_t d = 0; d < kFeatureCount; ++d) params.weights[d] -= cfg.learning_rate * g.grad_w[d];
      params.bias -= cfg.learning_rate * g.grad_b;
    }
    result.epoch_loss.push_back(bce_loss_gradient(params.weights, params.bias, x, y, cfg.l2).loss);
  }
  return result;
}

double predict_proba(const ModelParams& params, const FeatureVector& f) {
  return sigmoid(linear(params.weights, params.bias, normalize(params, f)));
}

namespace {

constexpr std::string_view kModelMagic = "settlemap-model";

void write_row(std::ostringstream& out, std::string_view key, const std::array<double, kFeatureCount>& v) {
  out << key;
  for (double x : v) out << ' ' << detail::format_g17(x);
  out << '\n';
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> tok;
  for (std::string t; in >> t;) tok.push_back(t);
  return tok;
}

}  // namespace

void write_model(const ModelParams& params, const std::filesystem::path& path) {
  std::ostringstream out;
  out << kModelMagic << '\n' << "version 1\n" << "features " << kFeatureCount << '\n';
  write_row(out, "weights", params.weights);
  out << "bias " << detail::format_g17(params.bias) << '\n';
  write_row(out, "feature_mean", params.feature_mean);
  write_row(out, "feature_std", params.feature_std);
  detail::write_file(path, out.str());
}

ModelParams load_model(const std::filesystem::path& path) {
  std::istringstream in(detail::read_file(path));
  auto fail = [&](const std::string& why) {
    return Error(ErrorCode::ParseError, path.string() + ": " + why);
  };
  std::string line;
  if (!std::getline(in, line) || line != kModelMagic) throw fail("not a model file");
  ModelParams params;
  std::unordered_set<std::string> seen;
  auto parse_array = [&](const std::vector<std::string>& tok, std::array<double, kFeatureCount>& dst) {
    if (tok.size() != kFeatureCount + 1) throw fail("expected " + std::to_string(kFeatureCount) + " values for " + tok[0]);
    for (std::size_t d = 0; d < kFeatureCount; ++d) {
      if (!detail::parse_double(tok[d + 1], dst[d])) throw fail("bad number '" + tok[d + 1] + "'");
    }
  };
  while (std::getline(in, line)) {
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    const std::string& key = tok[0];
    if (key == "version") {
      if (tok.size() != 2 || tok[1] != "1") throw fail("unsupported version");
    } else if (key == "features") {
      if (tok.size() != 2 || tok[1] != std::to_string(kFeatureCount)) throw fail("feature count mismatch");
    } else if (key == "weights") {
      parse_array(tok, params.weights);
    } else if (key == "bias") {
      if (tok.size() != 2 || !detail::parse_double(tok[1], params.bias)) throw fail("bad bias");
    } else if (key == "feature_mean") {
      parse_array(tok, params.feature_mean);
    } else if (key == "feature_std") {
      parse_array(tok, params.feature_std);
      for (double s : params.feature_std) {
        if (!(s > 0.0)) throw fail("feature_std entries must be positive");
      }
    } else {
      throw fail("unknown key '" + key + "'");
    }
    seen.insert(key);
  }
  for (const char* k : {"version", "weights", "bias", "feature_mean", "feature_std"}) {
    if (!seen.count(k)) throw fail(std::string("missing ") + k);
  }
  return params;
}

std::vector<ScoreRow> load_score_file(const std::filesystem::path& path) {
  std::istringstream in(detail::read_file(path));
  std::vector<ScoreRow> rows;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    auto fail = [&](const std::string& why) {
      return Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(lineno) + ": " + why);
    };
    if (tab == std::string::npos) throw fail("expected tile_id<TAB>probability");
    ScoreRow row{line.substr(0, tab), 0.0};
    if (!detail::parse_double(std::string_view(line).substr(tab + 1), row.probability)) throw fail("bad probability");
    if (!(row.probability >= 0.0 && row.probability <= 1.0)) throw fail("probability outside [0,1]");
    if (!ids.insert(row.tile_id).second) throw fail("duplicate tile_id " + row.tile_id);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_score_file(std::span<const ScoreRow> rows, const std::filesystem::path& path) {
  std::string out;
  for (const auto& r : rows) {
    out += r.tile_id;
    out += '\t';
    out += detail::format_g17(r.probability);
    out += '\n';
  }
  detail::write_file(path, out);
}

}  // namespace settlemap
