#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "formbench/cluster_eval.hpp"
#include "formbench/dataset.hpp"
#include "formbench/linear_probe.hpp"
#include "formbench/reducer.hpp"

namespace formbench {

inline constexpr int kResultsSchemaVersion = 1;
inline constexpr int kConfigSchemaVersion = 1;

struct CellSpec {
  std::string model;
  Variant variant = Variant::NoSeg;
  std::filesystem::path embeddings;
};

struct DatasetSpec {
  std::string tag;
  std::filesystem::path labels;
  std::vector<CellSpec> cells;
};

enum class KnnSpace { Reduced, Original };

struct EvalSettings {
  std::size_t knn_k = 10;
  /// nullopt = number of classes in the label table.
  std::optional<std::size_t> kmeans_k;
  std::size_t kmeans_trials = 3;
  Normalization normalization = Normalization::L2;
  KnnSpace knn_space = KnnSpace::Reduced;
};

struct RunConfig {
  std::vector<DatasetSpec> datasets;
  std::vector<Variant> variants{Variant::NoSeg, Variant::Seg};
  std::vector<std::size_t> dims{10, 20, 30};
  UmapParams umap;
  EvalSettings eval;
  ProbeConfig probe;
  bool run_probe = true;
  std::uint64_t master_seed = 0;
  /// Empty = `<out>/cache`.
  std::filesystem::path cache_dir;
  /// Parallel cell jobs; 0 = hardware concurrency.
  std::size_t jobs = 0;

  void validate() const;
};

/// Parses a config document; relative paths resolve against `base_dir`.
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);
/// Canonical form used for hashing. Paths are emitted as given.
nlohmann::json config_to_json(const RunConfig& config);

struct EvalResult {
  std::string dataset_tag;
  std::string model_tag;
  Variant variant = Variant::NoSeg;
  bool present = false;
  std::string absent_reason;

  std::size_t n = 0;
  std::size_t dim = 0;
  std::string embedding_digest;

  MeanStd kmeans_ari;
  MeanStd kmeans_v;
  std::vector<KMeansRun> kmeans_best;
  std::size_t kmeans_k = 0;

  double knn_accuracy = 0.0;
  std::vector<double> knn_per_dim;
  std::size_t knn_k = 0;

  bool has_probe = false;
  double probe_accuracy = 0.0;
  std::vector<double> probe_folds;

  /// Throws Error if any metric is outside its bounds.
  void validate() const;
};

nlohmann::json results_to_json(const std::vector<EvalResult>& results, const std::string& config_digest);
std::vector<EvalResult> results_from_json(const nlohmann::json& doc);
std::vector<EvalResult> load_results(const std::filesystem::path& path);

struct RunOptions {
  /// Verify the existing manifest's input digests before running.
  bool resume = false;
  bool write_report = true;
};

/// Evaluates one (dataset, model, variant) cell.
EvalResult run_cell(const RunConfig& config, const DatasetSpec& dataset, const LabelTable& labels,
                    const CellSpec& cell, const std::filesystem::path& cache_dir);

/// Executes the full grid and writes results.json, manifest.json and (when
/// requested) report.csv / report.txt under `out_dir`.
std::vector<EvalResult> run(const RunConfig& config, const std::filesystem::path& out_dir,
                            const RunOptions& options = {});

/// Checks every input digest recorded in a manifest. Throws Error naming the
/// first mismatching file.
void verify_manifest(const std::filesystem::path& manifest_path);

// ---------------------------------------------------------------------------
// Reports

struct DeltaRow {
  std::string dataset_tag;
  std::string model_tag;
  std::string metric;
  std::optional<double> no_seg;
  std::optional<double> seg;
  std::optional<double> delta;
  bool best_no_seg = false;
  bool best_seg = false;
};

/// Metric keys in report column order.
const std::vector<std::string>& report_metrics();

/// One row per (dataset, model, metric), in first-appearance order.
std::vector<DeltaRow> build_delta_rows(const std::vector<EvalResult>& results);

/// Throws Error unless delta == seg - no_seg exactly for every row.
void check_deltas(const std::vector<DeltaRow>& rows);

/// Three decimals, e.g. "0.275".
std::string format_value(double v);
/// Signed three decimals: "+0.275", "−0.024"; zero renders "+0.000".
/// `ascii` uses '-' instead of U+2212.
std::string format_delta(double v, bool ascii = false);

std::string render_report_text(const std::vector<DeltaRow>& rows);
std::string render_report_csv(const std::vector<DeltaRow>& rows);

}  // namespace formbench
