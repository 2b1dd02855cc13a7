// Acceptance checks 1-8. One PASS/FAIL line each; exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

#include "../test_support.hpp"
#include "settlemap/classifier.hpp"
#include "settlemap/dataset.hpp"
#include "settlemap/error.hpp"
#include "settlemap/evaluator.hpp"
#include "settlemap/geojson.hpp"
#include "settlemap/kernels.hpp"
#include "settlemap/pipeline.hpp"
#include "settlemap/postprocess.hpp"

using namespace settlemap;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int n, const char* name, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", n, name, o.detail.c_str());
  std::fflush(stdout);
  failures += !o.pass;
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

Outcome synthetic_end_to_end() {
  const fs::path dir = testutil::temp_dir("accept_e2e");
  SynthSpec spec;
  spec.width = spec.height = 1024;
  spec.patches = 6;
  spec.seed = 42;
  cmd_synth(spec, dir);
  PipelineConfig cfg = load_pipeline_config(dir / "pipeline.json");
  cfg.threads = 1;
  cfg.quiet = true;
  kernels::set_thread_count(1);
  const auto t0 = std::chrono::steady_clock::now();
  cmd_run_all(cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  kernels::set_thread_count(0);

  // Recount kappa from the written maps rather than trusting the summary.
  const RasterImage img = load_raster(cfg.raster);
  const auto cm = confusion_counts(load_feature_collection(output_layout(cfg.out_dir).settlements),
                                   load_feature_collection(cfg.truth), img.transform, img.width, img.height);
  const double k = cohens_kappa(cm);
  fs::remove_all(dir);
  return {k >= 0.80 && secs <= 60.0, fmt("kappa %.4f (>= 0.80), %.2f s single-threaded (<= 60)", k, secs)};
}

Outcome undersampling() {
  std::vector<TileRecord> recs;
  for (int k = 0; k < 110; ++k) {
    TileRecord r;
    r.tile_id = fmt("t%03d", k);
    r.label = k % 11 == 0;
    recs.push_back(r);
  }
  bool ok = true;
  std::size_t last_pos = 0, last_neg = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto out = undersample_negatives(recs, {4.0, seed});
    std::size_t pos = 0, neg = 0;
    for (const auto& r : out) (r.label ? pos : neg) += 1;
    ok = ok && out.size() == 50 && pos == 10 && neg == 40;
    last_pos = pos;
    last_neg = neg;
  }
  return {ok, fmt("20 seeds: %zu positives + %zu negatives kept", last_pos, last_neg)};
}

Outcome kappa_oracle() {
  Rng rng(1234);
  double worst = 0.0;
  int compared = 0;
  for (int trial = 0; compared < 50; ++trial) {
    const int w = 1 + static_cast<int>(rng.below(64)), h = 1 + static_cast<int>(rng.below(64));
    // Unit-pixel grid; random pixel-aligned rectangles as both maps.
    const GeoTransform t{0, double(h), 1, -1, ""};
    auto random_map = [&](FeatureCollection& fc, std::vector<std::uint8_t>& mask) {
      mask.assign(static_cast<std::size_t>(w) * h, 0);
      const int n = static_cast<int>(rng.below(5));
      for (int k = 0; k < n; ++k) {
        const int c0 = static_cast<int>(rng.below(w)), r0 = static_cast<int>(rng.below(h));
        const int c1 = c0 + 1 + static_cast<int>(rng.below(w - c0)), r1 = r0 + 1 + static_cast<int>(rng.below(h - r0));
        Feature f;
        f.geometry.parts.push_back(testutil::rect_poly(c0, h - r1, c1, h - r0));
        fc.features.push_back(f);
        for (int r = r0; r < r1; ++r) {
          for (int c = c0; c < c1; ++c) mask[static_cast<std::size_t>(r) * w + c] = 1;
        }
      }
    };
    FeatureCollection pred, truth;
    std::vector<std::uint8_t> pm, tm;
    random_map(pred, pm);
    random_map(truth, tm);
    double tp = 0, fp = 0, fn = 0, tn = 0;
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        const auto i = static_cast<std::size_t>(r) * w + c;
        if (pm[i] && tm[i]) ++tp;
        else if (pm[i]) ++fp;
        else if (tm[i]) ++fn;
        else ++tn;
      }
    }
    const auto cm = confusion_counts(pred, truth, t, w, h);
    if (double(cm.tp) != tp || double(cm.fp) != fp || double(cm.fn) != fn || double(cm.tn) != tn) {
      return {false, fmt("trial %d: confusion counts differ", trial)};
    }
    const double expected = oracle::kappa(tp, fp, fn, tn);
    if (!std::isfinite(expected)) continue;  // degenerate marginals: draw again
    worst = std::max(worst, std::abs(cohens_kappa(cm) - expected));
    ++compared;
  }
  const double hand = cohens_kappa({40, 10, 20, 30});
  return {worst <= 1e-12 && hand == 0.4 && compared == 50,
          fmt("%d grids, max |diff| %.3g (<= 1e-12); hand case %s", compared, worst, hand == 0.4 ? "== 0.4" : "!= 0.4")};
}

Outcome geometry_oracle() {
  Rng rng(99);
  int disagreements = 0, area_mismatch = 0, checks = 0;
  for (int fixture = 0; fixture < 100; ++fixture) {
    const int n = 16;
    oracle::CellSet cells(n, n);
    std::vector<RectFootprint> squares;
    FeatureCollection truth;
    const double density = 0.05 + 0.4 * rng.unit();
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        if (rng.unit() < density) {
          cells.set(i, j);
          squares.push_back({double(i), double(j), double(i + 1), double(j + 1)});
        }
      }
    }
    const MultiPolygonGeom mp = rectilinear_union(squares, SquareGrid{0, 0, 1, 1});
    area_mismatch += area(mp) != static_cast<double>(cells.count());
    for (const auto& p : mp.parts) {
      Feature f;
      f.geometry.parts.push_back(p);
      truth.features.push_back(f);
    }

    // rect_intersects_polygon on random lattice rectangles.
    const int sizes[] = {1, 2, 4, 5};
    for (int q = 0; q < 10; ++q) {
      const int w = sizes[rng.below(4)], h = sizes[rng.below(4)];
      const int x0 = static_cast<int>(rng.below(n + 4)) - 2, y0 = static_cast<int>(rng.below(n + 4)) - 2;
      const RectFootprint r{double(x0), double(y0), double(x0 + w), double(y0 + h)};
      const bool expected = oracle::rect_touches_cells_dense(cells, r, 201);
      const bool got = std::any_of(mp.parts.begin(), mp.parts.end(),
                                   [&](const PolygonGeom& p) { return rect_intersects_polygon(r, p); });
      disagreements += expected != got;
      ++checks;
    }

    // label_tiles over every window of a sliding grid; pixel (c, r) is cell (c, r).
    const GeoTransform t{0, 0, 1, 1, ""};
    const int tile = sizes[1 + rng.below(3)];
    const TileSpec spec{tile, 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(tile)))};
    const auto windows = enumerate_windows(n, n, spec);
    const auto recs = label_tiles(windows, t, truth, spec.stride);
    for (std::size_t k = 0; k < windows.size(); ++k) {
      const auto& w = windows[k];
      const RectFootprint fp{double(w.col_off), double(w.row_off), double(w.col_off + w.width),
                             double(w.row_off + w.height)};
      disagreements += recs[k].label != oracle::rect_touches_cells_dense(cells, fp, 201);
      ++checks;
    }
  }
  return {disagreements == 0 && area_mismatch == 0,
          fmt("100 fixtures, %d checks, %d disagreements, %d union area mismatches", checks, disagreements,
              area_mismatch)};
}

Outcome gradient_check() {
  Rng rng(2024);
  std::vector<FeatureVector> rows;
  std::vector<std::uint8_t> labels;
  for (int k = 0; k < 80; ++k) {
    FeatureVector f{};
    for (auto& v : f) v = rng.unit() * 4.0 - 2.0;
    rows.push_back(f);
    labels.push_back(static_cast<std::uint8_t>(rng.below(2)));
  }
  const double l2 = 1e-3, h = 1e-5;
  double worst = 0.0;
  for (int point = 0; point < 20; ++point) {
    std::array<double, kFeatureCount> w{};
    for (auto& v : w) v = rng.unit() - 0.5;
    const double b = rng.unit() - 0.5;
    const auto g = bce_loss_gradient(w, b, rows, labels, l2);
    auto loss = [&](const std::array<double, kFeatureCount>& ww, double bb) {
      return bce_loss_gradient(ww, bb, rows, labels, l2).loss;
    };
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t k = 0; k <= kFeatureCount; ++k) {
      double numeric, analytic;
      if (k < kFeatureCount) {
        auto wp = w, wm = w;
        wp[k] += h;
        wm[k] -= h;
        numeric = (loss(wp, b) - loss(wm, b)) / (2 * h);
        analytic = g.grad_w[k];
      } else {
        numeric = (loss(w, b + h) - loss(w, b - h)) / (2 * h);
        analytic = g.grad_b;
      }
      diff += (analytic - numeric) * (analytic - numeric);
      na += analytic * analytic;
      nn += numeric * numeric;
    }
    worst = std::max(worst, std::sqrt(diff) / std::max(std::sqrt(na), std::sqrt(nn)));
  }
  return {worst < 1e-6, fmt("20 points, max relative error %.3g (< 1e-6)", worst)};
}

Outcome postprocess_fixtures() {
  // Isolated high square in a low field; a solid high cluster elsewhere.
  std::vector<ScoredSquare> squares;
  auto add = [&](int i, int j, double p) {
    squares.push_back({fmt("s%d_%d", i, j), {double(i), double(j), double(i + 1), double(j + 1)}, i, j, p});
  };
  for (int j = 0; j < 5; ++j) {
    for (int i = 0; i < 5; ++i) add(i, j, i == 2 && j == 2 ? 0.95 : 0.1);
  }
  for (int j = 0; j < 3; ++j) {
    for (int i = 10; i < 13; ++i) add(i, j, 0.9);
  }
  const auto kept = median_filter(squares, 0.5);
  std::size_t expected_kept = 0;
  for (const auto& s : squares) {
    std::array<double, 9> win{};
    int w = 0;
    for (int dj = -1; dj <= 1; ++dj) {
      for (int di = -1; di <= 1; ++di) {
        double v = 0.0;
        for (const auto& o : squares) {
          if (o.grid_i == s.grid_i + di && o.grid_j == s.grid_j + dj) v = o.probability;
        }
        win[w++] = v;
      }
    }
    expected_kept += oracle::median9(win) >= 0.5;
  }
  const bool isolated_gone =
      std::none_of(kept.begin(), kept.end(), [](const ScoredSquare& s) { return s.grid_i == 2 && s.grid_j == 2; });

  const std::vector<ScoredSquare> pair{{"a", {0, 0, 2, 2}, 0, 0, 0.6}, {"b", {1, 0, 3, 2}, 1, 0, 0.8}};
  const auto regions = dissolve(pair, SquareGrid{0, 0, 1, 1});
  const bool one_region = regions.size() == 1 && regions[0].mean_probability == 0.7 && area(regions[0].geometry) == 6.0;

  FeatureCollection blocks;
  Feature block;
  block.geometry.parts.push_back(testutil::rect_poly(0, 0, 2, 1));
  blocks.features.push_back(block);
  const std::vector<ScoredSquare> half{{"h", {0, 0, 1, 1}, 0, 0, 0.9}};
  const auto filtered = block_filter(half, blocks, "", 0.0, 256);
  const double cov = filtered.features.empty() ? -1.0 : *filtered.features[0].properties.number("coverage_fraction");

  const bool ok = isolated_gone && kept.size() == expected_kept && one_region && std::abs(cov - 0.5) <= 1.0 / 256;
  return {ok, fmt("isolated removed %s, kept %zu/%zu by oracle, dissolve mean %.17g, coverage %.6f",
                  isolated_gone ? "yes" : "no", kept.size(), expected_kept,
                  regions.empty() ? -1.0 : regions[0].mean_probability, cov)};
}

Outcome determinism() {
  const fs::path dir = testutil::temp_dir("accept_det");
  SynthSpec spec;
  spec.width = spec.height = 512;
  spec.patches = 3;
  spec.seed = 11;
  cmd_synth(spec, dir / "s1");
  cmd_synth(spec, dir / "s2");
  bool same = testutil::tree_contents(dir / "s1") == testutil::tree_contents(dir / "s2");

  auto run_stages = [&](const fs::path& out, int threads) {
    PipelineConfig cfg = load_pipeline_config(dir / "s1" / "pipeline.json");
    cfg.out_dir = out;
    cfg.threads = threads;
    cfg.quiet = true;
    kernels::set_thread_count(threads);
    cmd_build_dataset(cfg);
    cmd_train(cfg);
    cmd_predict(cfg);
    cmd_postprocess(cfg);
    cmd_evaluate(cfg);
    PipelineConfig all = cfg;
    all.out_dir = out / "all";
    cmd_run_all(all);
    return testutil::tree_contents(out);
  };
  const auto a = run_stages(dir / "t1a", 1);
  const auto b = run_stages(dir / "t1b", 1);
  const auto c = run_stages(dir / "t4", 4);
  kernels::set_thread_count(0);
  same = same && a == b && a == c && !a.empty();
  std::size_t files = a.size();
  fs::remove_all(dir);
  return {same, fmt("synth + 6 commands, %zu files byte-identical across reruns and 1 vs 4 threads", files)};
}

Outcome flip_algebra() {
  Rng rng(808);
  bool ok = true;
  for (int k = 0; k < 200 && ok; ++k) {
    TilePixels t(1 + static_cast<int>(rng.below(40)), 1 + static_cast<int>(rng.below(40)));
    for (auto& v : t.data) v = static_cast<std::uint8_t>(rng.below(256));
    ok = flip_horizontal(flip_horizontal(t)) == t && flip_vertical(flip_vertical(t)) == t &&
         flip_horizontal(flip_vertical(t)) == flip_vertical(flip_horizontal(t));
    if (ok && t.width >= 2 && t.height >= 2) {
      const auto f = featurize(t);
      ok = featurize(flip_horizontal(t)) == f && featurize(flip_vertical(t)) == f &&
           featurize(flip_vertical(flip_horizontal(t))) == f;
    }
  }
  return {ok, "200 random tiles, involutions commute, features identical"};
}

}  // namespace

int main() {
  report(1, "synthetic end-to-end", synthetic_end_to_end);
  report(2, "undersampling exactness", undersampling);
  report(3, "kappa oracle equivalence", kappa_oracle);
  report(4, "geometry oracle equivalence", geometry_oracle);
  report(5, "gradient check", gradient_check);
  report(6, "post-processing fixtures", postprocess_fixtures);
  report(7, "determinism", determinism);
  report(8, "flip algebra", flip_algebra);
  return failures == 0 ? 0 : 1;
}
