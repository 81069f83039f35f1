// Acceptance suite: one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "formbench/cluster_eval.hpp"
#include "formbench/linear_probe.hpp"
#include "formbench/mask_ops.hpp"
#include "formbench/metrics.hpp"
#include "formbench/pipeline.hpp"
#include "formbench/random.hpp"
#include "formbench/reducer.hpp"
#include "formbench/seed.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace formbench;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = FORMBENCH_FIXTURE_DIR;

struct Outcome {
  bool ok = true;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome metric_oracles() {
  Outcome o;
  Rng rng(20240601);
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng.below(11);
    const auto a = testing::random_labels(n, 1 + static_cast<int>(rng.below(5)), rng);
    const auto b = testing::random_labels(n, 1 + static_cast<int>(rng.below(5)), rng);
    const auto vm = v_measure(a, b);
    const auto ref = oracle::v_measure_entropy(a, b);
    worst = std::max({worst, std::abs(ari(a, b) - oracle::ari_pairs(a, b)), std::abs(vm.homogeneity - ref.h),
                      std::abs(vm.completeness - ref.c), std::abs(vm.v - ref.v)});
  }
  const double fixed = ari(std::vector<int>{0, 0, 1, 1}, std::vector<int>{0, 0, 1, 2});
  const double fixed_err = std::abs(fixed - 4.0 / 7.0);
  o.ok = worst <= 1e-12 && fixed_err <= 1e-12;
  o.detail = "max|err|=" + fmt("%.2e", worst) + " ARI([0,0,1,1],[0,0,1,2])=" + fmt("%.15f", fixed);
  return o;
}

Outcome blob_recovery() {
  Outcome o;
  int good = 0;
  for (std::uint64_t m = 0; m < 5; ++m) {
    const auto data = testing::gaussian_blobs(3, 100, 64, 10.0, seed_derive(m, "blobs", 0));
    UmapParams p;
    p.seed = seed_derive(m, "umap", 0);
    const auto red = umap_reduce(data.x, 10, p);
    const std::vector<Matrix<double>> coords{red.coords.cast<double>()};
    const auto km = kmeans_eval(coords, data.labels, 3, 3, seed_derive(m, "kmeans", 0));
    const auto knn = knn_eval(coords, data.labels, 10);
    const bool pass = km.ari.mean >= 0.95 && knn.accuracy >= 0.99;
    good += pass;
    o.detail += "seed" + std::to_string(m) + ":ARI=" + fmt("%.3f", km.ari.mean) + ",KNN=" +
                fmt("%.3f", knn.accuracy) + " ";
  }
  o.ok = good >= 4;
  o.detail += "(" + std::to_string(good) + "/5 seeds)";
  return o;
}

Outcome probe_correctness() {
  Outcome o;
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 50; ++s) worst = std::max(worst, testing::gradient_check(1000 + s).worst());
  const auto data = testing::separable_classes(4, 500, 32, 8.0, 77);
  ProbeConfig cfg;
  cfg.folds = 10;
  cfg.seed = 5;
  const auto cv = cross_validate(data.x, data.labels, 4, cfg);
  o.ok = worst < 1e-4 && cv.mean_accuracy >= 0.98;
  o.detail = "max grad rel err=" + fmt("%.2e", worst) + " 10-fold CV acc=" + fmt("%.4f", cv.mean_accuracy);
  return o;
}

Outcome mask_properties() {
  Outcome o;
  constexpr MaskClass all[] = {MaskClass::Background, MaskClass::Handwriting, MaskClass::PrintedText,
                               MaskClass::FormElements};
  Rng rng(31337);
  int violations = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t w = 1 + rng.below(64), h = 1 + rng.below(64);
    GrayImage img(w, h);
    SegMask mask{w, h, std::vector<MaskClass>(w * h)};
    for (std::size_t i = 0; i < w * h; ++i) {
      img.pixels[i] = static_cast<std::uint8_t>(rng.below(256));
      mask.classes[i] = all[rng.below(4)];
    }
    const auto keep = KeepSet::from_bits(static_cast<unsigned>(rng.below(16)));
    const auto wider = KeepSet::from_bits(keep.bits() | static_cast<unsigned>(rng.below(16)));
    const auto once = apply_mask(img, mask, keep);
    const auto more = apply_mask(img, mask, wider);
    if (!(apply_mask(once, mask, keep) == once)) ++violations;
    for (std::size_t i = 0; i < w * h; ++i) {
      const bool kept = keep.contains(mask.classes[i]);
      if (kept && once.pixels[i] != img.pixels[i]) ++violations;
      if (!kept && once.pixels[i] != kWhite) ++violations;
      if (kept && more.pixels[i] != img.pixels[i]) ++violations;
    }
  }
  // Synthetic color-coded mask: red handwriting, green printed text, blue form lines, white paper.
  const Raster colors{5, 1, 3, {255, 0, 0, 0, 255, 0, 0, 0, 255, 255, 255, 255, 200, 200, 200}};
  const auto decoded = decode_mask(colors, MaskEncoding::ColorCoded);
  const std::vector<MaskClass> expected{MaskClass::Handwriting, MaskClass::PrintedText, MaskClass::FormElements,
                                        MaskClass::Background, MaskClass::Background};
  const bool colors_ok = decoded.classes == expected;
  o.ok = violations == 0 && colors_ok;
  o.detail = std::to_string(violations) + " property violations; color decoding " + (colors_ok ? "ok" : "wrong");
  return o;
}

Outcome determinism() {
  Outcome o;
  const auto base = fs::temp_directory_path() / "formbench_acceptance_det";
  fs::remove_all(base);
  const auto cfg = load_config(kFixtures / "grid" / "config.json");
  run(cfg, base / "a");
  run(cfg, base / "b");
  const bool json_same = slurp(base / "a" / "results.json") == slurp(base / "b" / "results.json");
  const bool csv_same = slurp(base / "a" / "report.csv") == slurp(base / "b" / "report.csv");
  o.ok = json_same && csv_same && !slurp(base / "a" / "report.csv").empty();
  o.detail = std::string("results.json ") + (json_same ? "identical" : "DIFFERS") + ", report.csv " +
             (csv_same ? "identical" : "DIFFERS");
  fs::remove_all(base);
  return o;
}

Outcome delta_report() {
  Outcome o;
  const auto rows = build_delta_rows(load_results(kFixtures / "table_results.json"));
  std::string us, fr;
  for (const auto& r : rows) {
    if (r.metric != "kmeans_ari" || !r.delta) continue;
    if (r.dataset_tag == "us1950" && r.model_tag == "ResNet50") us = format_delta(*r.delta);
    if (r.dataset_tag == "french" && r.model_tag == "CLIP-ViT-L/14-336") fr = format_delta(*r.delta);
  }
  const auto text = render_report_text(rows);
  const bool text_ok = text.find("| 0.000 | **0.275** | +0.275 |") != std::string::npos &&
                       text.find("| **0.833** | 0.809 | −0.024 |") != std::string::npos;
  o.ok = us == "+0.275" && fr == "−0.024" && text_ok;
  o.detail = "ResNet50 0.000->0.275: " + us + "; CLIP-L 0.833->0.809: " + fr;
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_s;  // 0 = no runtime bound
    std::function<Outcome()> fn;
  };
  const std::vector<Criterion> criteria{
      {"metric-oracle-equivalence", 5.0, metric_oracles},
      {"synthetic-blob-recovery", 60.0, blob_recovery},
      {"probe-correctness", 120.0, probe_correctness},
      {"mask-application-properties", 5.0, mask_properties},
      {"run-determinism", 0.0, determinism},
      {"delta-report-fidelity", 0.0, delta_report},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.fn();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0 && secs >= c.budget_s) {
      out.ok = false;
      out.detail += " over time budget";
    }
    failed += !out.ok;
    std::printf("%s %s (%.2fs%s) %s\n", out.ok ? "PASS" : "FAIL", c.name, secs,
                c.budget_s > 0 ? (" / " + fmt("%.0f", c.budget_s) + "s").c_str() : "", out.detail.c_str());
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
