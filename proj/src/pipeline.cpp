#include "formbench/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <set>
#include <sstream>
#include <thread>

#include "formbench/digest.hpp"
#include "formbench/error.hpp"
#include "formbench/seed.hpp"

namespace formbench {

using nlohmann::json;

namespace {

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw Error("config: '" + where + "' must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!ok.count(key)) throw Error("config: unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read_opt(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) path = base / path;
  return path.lexically_normal();
}

std::string_view to_string(Normalization n) {
  switch (n) {
    case Normalization::L2: return "l2";
    case Normalization::ZScore: return "zscore";
    case Normalization::None: return "none";
  }
  return "l2";
}

Normalization parse_normalization(const std::string& s) {
  if (s == "l2") return Normalization::L2;
  if (s == "zscore") return Normalization::ZScore;
  if (s == "none") return Normalization::None;
  throw Error("config: unknown normalization '" + s + "' (expected l2, zscore or none)");
}

KnnSpace parse_knn_space(const std::string& s) {
  if (s == "reduced") return KnnSpace::Reduced;
  if (s == "original") return KnnSpace::Original;
  throw Error("config: unknown knn_space '" + s + "' (expected reduced or original)");
}

json umap_to_json(const UmapParams& u) {
  return {{"n_neighbors", u.n_neighbors}, {"min_dist", u.min_dist}, {"spread", u.spread},
          {"metric", "euclidean"}, {"n_epochs", u.n_epochs},
          {"negative_sample_rate", u.negative_sample_rate}, {"learning_rate", u.learning_rate}};
}

std::string cell_key(const std::string& dataset, const CellSpec& cell) {
  return dataset + "/" + cell.model + "/" + std::string(to_string(cell.variant));
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
    if (!out) throw Error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(path.string() + ": invalid JSON: " + e.what());
  }
}

bool in_unit(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

}  // namespace

// ---------------------------------------------------------------------------
// Config

void RunConfig::validate() const {
  if (dims.empty()) throw Error("config: dims must not be empty");
  for (auto d : dims) {
    if (d == 0) throw Error("config: reduced dims must be positive");
  }
  if (variants.empty()) throw Error("config: variants must not be empty");
  if (eval.knn_k == 0) throw Error("config: knn_k must be positive");
  if (eval.kmeans_trials == 0) throw Error("config: kmeans_trials must be positive");
  if (eval.kmeans_k && *eval.kmeans_k == 0) throw Error("config: kmeans_k must be positive");
  if (umap.n_neighbors < 2) throw Error("config: umap n_neighbors must be >= 2");
  if (!(umap.min_dist > 0.0) || !(umap.min_dist <= umap.spread)) {
    throw Error("config: umap requires 0 < min_dist <= spread");
  }
  if (umap.n_epochs == 0) throw Error("config: umap n_epochs must be positive");
  probe.validate();
  std::set<std::string> tags;
  for (const auto& ds : datasets) {
    if (ds.tag.empty()) throw Error("config: dataset tag must not be empty");
    if (!tags.insert(ds.tag).second) throw Error("config: duplicate dataset tag '" + ds.tag + "'");
    std::set<std::string> cells;
    for (const auto& c : ds.cells) {
      if (c.model.empty()) throw Error("config: cell model must not be empty");
      if (!cells.insert(cell_key(ds.tag, c)).second) {
        throw Error("config: duplicate cell " + cell_key(ds.tag, c));
      }
    }
  }
}

RunConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  try {
    check_keys(doc, {"schema_version", "master_seed", "variants", "dims", "umap", "eval", "probe",
                     "cache_dir", "jobs", "datasets"},
               "top level");
    if (doc.value("schema_version", kConfigSchemaVersion) != kConfigSchemaVersion) {
      throw Error("config: unsupported schema_version");
    }
    read_opt(doc, "master_seed", cfg.master_seed);
    read_opt(doc, "dims", cfg.dims);
    read_opt(doc, "jobs", cfg.jobs);
    if (doc.contains("variants")) {
      cfg.variants.clear();
      for (const auto& v : doc.at("variants")) cfg.variants.push_back(parse_variant(v.get<std::string>()));
    }
    if (doc.contains("cache_dir")) cfg.cache_dir = resolve(base_dir, doc.at("cache_dir").get<std::string>());
    if (doc.contains("umap")) {
      const auto& u = doc.at("umap");
      check_keys(u, {"n_neighbors", "min_dist", "spread", "metric", "n_epochs", "negative_sample_rate",
                     "learning_rate"},
                 "umap");
      read_opt(u, "n_neighbors", cfg.umap.n_neighbors);
      read_opt(u, "min_dist", cfg.umap.min_dist);
      read_opt(u, "spread", cfg.umap.spread);
      read_opt(u, "n_epochs", cfg.umap.n_epochs);
      read_opt(u, "negative_sample_rate", cfg.umap.negative_sample_rate);
      read_opt(u, "learning_rate", cfg.umap.learning_rate);
      if (u.contains("metric") && u.at("metric").get<std::string>() != "euclidean") {
        throw Error("config: only the euclidean UMAP metric is supported");
      }
    }
    if (doc.contains("eval")) {
      const auto& e = doc.at("eval");
      check_keys(e, {"knn_k", "kmeans_k", "kmeans_trials", "normalization", "knn_space"}, "eval");
      read_opt(e, "knn_k", cfg.eval.knn_k);
      read_opt(e, "kmeans_trials", cfg.eval.kmeans_trials);
      if (e.contains("kmeans_k")) {
        const auto& k = e.at("kmeans_k");
        if (k.is_string()) {
          if (k.get<std::string>() != "auto") throw Error("config: kmeans_k must be an integer or \"auto\"");
        } else {
          cfg.eval.kmeans_k = k.get<std::size_t>();
        }
      }
      if (e.contains("normalization")) cfg.eval.normalization = parse_normalization(e.at("normalization"));
      if (e.contains("knn_space")) cfg.eval.knn_space = parse_knn_space(e.at("knn_space"));
    }
    if (doc.contains("probe")) {
      const auto& p = doc.at("probe");
      check_keys(p, {"enabled", "epochs", "batch_size", "base_lr", "weight_decay", "beta1", "beta2",
                     "decay_milestones", "decay_factor", "folds"},
                 "probe");
      read_opt(p, "enabled", cfg.run_probe);
      read_opt(p, "epochs", cfg.probe.epochs);
      read_opt(p, "batch_size", cfg.probe.batch_size);
      read_opt(p, "base_lr", cfg.probe.base_lr);
      read_opt(p, "weight_decay", cfg.probe.weight_decay);
      read_opt(p, "beta1", cfg.probe.beta1);
      read_opt(p, "beta2", cfg.probe.beta2);
      read_opt(p, "decay_milestones", cfg.probe.decay_milestones);
      read_opt(p, "decay_factor", cfg.probe.decay_factor);
      read_opt(p, "folds", cfg.probe.folds);
    }
    if (doc.contains("datasets")) {
      for (const auto& d : doc.at("datasets")) {
        check_keys(d, {"tag", "labels", "cells"}, "dataset");
        DatasetSpec ds;
        ds.tag = d.at("tag").get<std::string>();
        ds.labels = resolve(base_dir, d.at("labels").get<std::string>());
        for (const auto& c : d.at("cells")) {
          check_keys(c, {"model", "variant", "embeddings"}, "cell");
          CellSpec cell;
          cell.model = c.at("model").get<std::string>();
          cell.variant = parse_variant(c.at("variant").get<std::string>());
          cell.embeddings = resolve(base_dir, c.at("embeddings").get<std::string>());
          ds.cells.push_back(std::move(cell));
        }
        cfg.datasets.push_back(std::move(ds));
      }
    }
  } catch (const json::exception& e) {
    throw Error(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_json_file(path), path.parent_path());
}

json config_to_json(const RunConfig& cfg) {
  json variants = json::array();
  for (auto v : cfg.variants) variants.push_back(std::string(to_string(v)));
  json datasets = json::array();
  for (const auto& ds : cfg.datasets) {
    json cells = json::array();
    for (const auto& c : ds.cells) {
      cells.push_back({{"model", c.model}, {"variant", std::string(to_string(c.variant))},
                       {"embeddings", c.embeddings.generic_string()}});
    }
    datasets.push_back({{"tag", ds.tag}, {"labels", ds.labels.generic_string()}, {"cells", cells}});
  }
  json eval = {{"knn_k", cfg.eval.knn_k},
               {"kmeans_trials", cfg.eval.kmeans_trials},
               {"normalization", std::string(to_string(cfg.eval.normalization))},
               {"knn_space", cfg.eval.knn_space == KnnSpace::Reduced ? "reduced" : "original"}};
  if (cfg.eval.kmeans_k) {
    eval["kmeans_k"] = *cfg.eval.kmeans_k;
  } else {
    eval["kmeans_k"] = "auto";
  }
  const auto& p = cfg.probe;
  return {{"schema_version", kConfigSchemaVersion},
          {"master_seed", cfg.master_seed},
          {"variants", variants},
          {"dims", cfg.dims},
          {"umap", umap_to_json(cfg.umap)},
          {"eval", eval},
          {"probe",
           {{"enabled", cfg.run_probe}, {"epochs", p.epochs}, {"batch_size", p.batch_size},
            {"base_lr", p.base_lr}, {"weight_decay", p.weight_decay}, {"beta1", p.beta1},
            {"beta2", p.beta2}, {"decay_milestones", p.decay_milestones},
            {"decay_factor", p.decay_factor}, {"folds", p.folds}}},
          {"datasets", datasets}};
}

// ---------------------------------------------------------------------------
// Results

void EvalResult::validate() const {
  if (!present) return;
  auto fail = [&](const std::string& what) {
    throw Error("result " + dataset_tag + "/" + model_tag + "/" + std::string(to_string(variant)) +
                ": " + what + " out of bounds");
  };
  if (!std::isfinite(kmeans_ari.mean) || kmeans_ari.mean < -1.0 || kmeans_ari.mean > 1.0) fail("ARI");
  if (!in_unit(kmeans_v.mean)) fail("V-measure");
  if (!(kmeans_ari.std >= 0.0) || !(kmeans_v.std >= 0.0)) fail("std");
  if (!in_unit(knn_accuracy)) fail("KNN accuracy");
  if (has_probe && !in_unit(probe_accuracy)) fail("probe accuracy");
}

json results_to_json(const std::vector<EvalResult>& results, const std::string& config_digest) {
  json arr = json::array();
  for (const auto& r : results) {
    json j = {{"dataset", r.dataset_tag}, {"model", r.model_tag},
              {"variant", std::string(to_string(r.variant))},
              {"status", r.present ? "ok" : "absent"}};
    if (!r.present) {
      j["reason"] = r.absent_reason;
      arr.push_back(std::move(j));
      continue;
    }
    json best = json::array();
    for (const auto& b : r.kmeans_best) {
      best.push_back({{"dim_index", b.dim_index}, {"trial", b.trial}, {"seed", b.seed},
                      {"inertia", b.inertia}, {"ari", b.ari}, {"v_measure", b.v_measure},
                      {"homogeneity", b.homogeneity}, {"completeness", b.completeness}});
    }
    j["n"] = r.n;
    j["dim"] = r.dim;
    j["embedding_sha256"] = r.embedding_digest;
    j["kmeans"] = {{"k", r.kmeans_k},
                   {"ari", {{"mean", r.kmeans_ari.mean}, {"std", r.kmeans_ari.std}}},
                   {"v_measure", {{"mean", r.kmeans_v.mean}, {"std", r.kmeans_v.std}}},
                   {"best_inertia", best}};
    j["knn"] = {{"k", r.knn_k}, {"accuracy", r.knn_accuracy}, {"per_dim", r.knn_per_dim}};
    if (r.has_probe) {
      j["probe"] = {{"accuracy", r.probe_accuracy}, {"per_fold", r.probe_folds}};
    } else {
      j["probe"] = nullptr;
    }
    arr.push_back(std::move(j));
  }
  return {{"schema", "formbench.results"}, {"schema_version", kResultsSchemaVersion},
          {"config_sha256", config_digest}, {"results", arr}};
}

std::vector<EvalResult> results_from_json(const json& doc) {
  try {
    if (doc.at("schema").get<std::string>() != "formbench.results" ||
        doc.at("schema_version").get<int>() != kResultsSchemaVersion) {
      throw Error("unsupported results schema");
    }
    std::vector<EvalResult> out;
    for (const auto& j : doc.at("results")) {
      EvalResult r;
      r.dataset_tag = j.at("dataset").get<std::string>();
      r.model_tag = j.at("model").get<std::string>();
      r.variant = parse_variant(j.at("variant").get<std::string>());
      r.present = j.at("status").get<std::string>() == "ok";
      if (!r.present) {
        r.absent_reason = j.value("reason", "");
        out.push_back(std::move(r));
        continue;
      }
      r.n = j.at("n").get<std::size_t>();
      r.dim = j.at("dim").get<std::size_t>();
      r.embedding_digest = j.at("embedding_sha256").get<std::string>();
      const auto& km = j.at("kmeans");
      r.kmeans_k = km.at("k").get<std::size_t>();
      r.kmeans_ari = {km.at("ari").at("mean").get<double>(), km.at("ari").at("std").get<double>()};
      r.kmeans_v = {km.at("v_measure").at("mean").get<double>(), km.at("v_measure").at("std").get<double>()};
      for (const auto& b : km.at("best_inertia")) {
        KMeansRun run;
        run.dim_index = b.at("dim_index").get<std::size_t>();
        run.trial = b.at("trial").get<std::size_t>();
        run.seed = b.at("seed").get<std::uint64_t>();
        run.inertia = b.at("inertia").get<double>();
        run.ari = b.at("ari").get<double>();
        run.v_measure = b.at("v_measure").get<double>();
        run.homogeneity = b.at("homogeneity").get<double>();
        run.completeness = b.at("completeness").get<double>();
        r.kmeans_best.push_back(run);
      }
      const auto& knn = j.at("knn");
      r.knn_k = knn.at("k").get<std::size_t>();
      r.knn_accuracy = knn.at("accuracy").get<double>();
      r.knn_per_dim = knn.at("per_dim").get<std::vector<double>>();
      if (!j.at("probe").is_null()) {
        r.has_probe = true;
        r.probe_accuracy = j.at("probe").at("accuracy").get<double>();
        r.probe_folds = j.at("probe").at("per_fold").get<std::vector<double>>();
      }
      r.validate();
      out.push_back(std::move(r));
    }
    return out;
  } catch (const json::exception& e) {
    throw Error(std::string("results: ") + e.what());
  }
}

std::vector<EvalResult> load_results(const std::filesystem::path& path) {
  return results_from_json(read_json_file(path));
}

// ---------------------------------------------------------------------------
// Execution

EvalResult run_cell(const RunConfig& config, const DatasetSpec& dataset, const LabelTable& labels,
                    const CellSpec& cell, const std::filesystem::path& cache_dir) {
  EvalResult r;
  r.dataset_tag = dataset.tag;
  r.model_tag = cell.model;
  r.variant = cell.variant;
  r.present = true;

  const std::string key = cell_key(dataset.tag, cell);
  r.embedding_digest = sha256_file(cell.embeddings);
  auto set = load_embeddings(cell.embeddings);
  set.model_tag = cell.model;
  set.variant = cell.variant;
  check_model_dim(set);
  const auto aligned = align(set, labels);
  r.n = set.size();
  r.dim = set.dim();

  std::vector<ReducedSet> reductions;
  for (std::size_t di = 0; di < config.dims.size(); ++di) {
    const std::size_t d = config.dims[di];
    if (d >= set.dim()) {
      throw Error(key + ": reduced dimension " + std::to_string(d) + " is not below D=" +
                  std::to_string(set.dim()));
    }
    UmapParams params = config.umap;
    params.seed = seed_derive(config.master_seed, "umap/" + key, di);
    const std::string cache_name =
        sha256_hex(r.embedding_digest + "|" + umap_to_json(params).dump() + "|d=" + std::to_string(d) +
                   "|seed=" + std::to_string(params.seed))
            .substr(0, 32) +
        ".femb";
    const auto cache_path = cache_dir / cache_name;
    ReducedSet reduced;
    bool cached = false;
    if (std::filesystem::exists(cache_path)) {
      try {
        auto c = load_embeddings(cache_path);
        if (c.ids == set.ids && c.dim() == d) {
          reduced.ids = std::move(c.ids);
          reduced.coords = std::move(c.data);
          reduced.d = d;
          reduced.params = params;
          cached = true;
        }
      } catch (const Error& e) {
        warn("ignoring unreadable cache entry " + cache_path.string() + ": " + e.what());
      }
    }
    if (!cached) {
      reduced = umap_reduce(aligned.features, d, params, set.ids);
      save_embeddings(reduced.to_embedding_set(cell.model, cell.variant), cache_path);
    }
    reductions.push_back(std::move(reduced));
  }

  const auto coords = as_double(reductions);
  r.kmeans_k = config.eval.kmeans_k.value_or(labels.num_classes());
  const auto km = kmeans_eval(coords, aligned.labels, r.kmeans_k, config.eval.kmeans_trials,
                              seed_derive(config.master_seed, "kmeans/" + key, 0),
                              config.eval.normalization);
  r.kmeans_ari = km.ari;
  r.kmeans_v = km.v_measure;
  r.kmeans_best = km.best_per_dim;

  r.knn_k = config.eval.knn_k;
  if (config.eval.knn_space == KnnSpace::Reduced) {
    const auto knn = knn_eval(coords, aligned.labels, r.knn_k);
    r.knn_accuracy = knn.accuracy;
    r.knn_per_dim = knn.per_dim;
  } else {
    const std::vector<Matrix<double>> original{aligned.features};
    const auto knn = knn_eval(original, aligned.labels, r.knn_k);
    r.knn_accuracy = knn.accuracy;
    r.knn_per_dim = knn.per_dim;
  }

  if (config.run_probe) {
    ProbeConfig probe = config.probe;
    probe.seed = seed_derive(config.master_seed, "probe/" + key, 0);
    const auto cv = cross_validate(aligned.features, aligned.labels, labels.num_classes(), probe);
    r.has_probe = true;
    r.probe_accuracy = cv.mean_accuracy;
    r.probe_folds = cv.fold_accuracies;
  }
  r.validate();
  return r;
}

namespace {

struct InputDigest {
  std::string path;
  std::string sha256;
};

std::vector<InputDigest> digest_inputs(const RunConfig& config) {
  std::vector<InputDigest> out;
  auto add = [&](const std::filesystem::path& p) {
    if (std::filesystem::exists(p)) out.push_back({p.generic_string(), sha256_file(p)});
  };
  for (const auto& ds : config.datasets) {
    add(ds.labels);
    for (const auto& c : ds.cells) {
      if (std::find(config.variants.begin(), config.variants.end(), c.variant) != config.variants.end()) {
        add(c.embeddings);
      }
    }
  }
  return out;
}

json manifest_json(const std::string& config_digest, const std::vector<InputDigest>& inputs,
                   const std::string& results_digest) {
  json arr = json::array();
  for (const auto& i : inputs) arr.push_back({{"path", i.path}, {"sha256", i.sha256}});
  return {{"schema", "formbench.manifest"}, {"schema_version", 1}, {"config_sha256", config_digest},
          {"inputs", arr}, {"results_sha256", results_digest}};
}

}  // namespace

void verify_manifest(const std::filesystem::path& manifest_path) {
  const auto doc = read_json_file(manifest_path);
  try {
    for (const auto& entry : doc.at("inputs")) {
      const auto path = entry.at("path").get<std::string>();
      const auto expected = entry.at("sha256").get<std::string>();
      if (!std::filesystem::exists(path)) throw Error("manifest input " + path + " no longer exists");
      const auto actual = sha256_file(path);
      if (actual != expected) {
        throw Error("digest mismatch for " + path + ": manifest has " + expected + ", file has " + actual);
      }
    }
  } catch (const json::exception& e) {
    throw Error(manifest_path.string() + ": malformed manifest: " + e.what());
  }
}

std::vector<EvalResult> run(const RunConfig& config, const std::filesystem::path& out_dir,
                            const RunOptions& options) {
  config.validate();
  std::filesystem::create_directories(out_dir);
  const auto cache_dir = config.cache_dir.empty() ? out_dir / "cache" : config.cache_dir;
  std::filesystem::create_directories(cache_dir);
  const std::string config_digest = sha256_hex(config_to_json(config).dump());
  const auto manifest_path = out_dir / "manifest.json";

  if (options.resume && std::filesystem::exists(manifest_path)) {
    const auto old = read_json_file(manifest_path);
    if (old.value("config_sha256", std::string()) != config_digest) {
      throw Error("cannot resume: config differs from the one recorded in " + manifest_path.string());
    }
    verify_manifest(manifest_path);
  }
  const auto inputs = digest_inputs(config);

  struct Job {
    const DatasetSpec* dataset;
    const CellSpec* cell;
    std::shared_ptr<const LabelTable> labels;
    std::size_t slot;
  };
  std::vector<EvalResult> results;
  std::vector<Job> jobs;
  for (const auto& ds : config.datasets) {
    std::shared_ptr<const LabelTable> labels;
    std::string label_error;
    if (std::filesystem::exists(ds.labels)) {
      labels = std::make_shared<const LabelTable>(load_labels(ds.labels));
    } else {
      label_error = "label file " + ds.labels.generic_string() + " not found";
    }
    for (const auto& cell : ds.cells) {
      if (std::find(config.variants.begin(), config.variants.end(), cell.variant) == config.variants.end()) {
        continue;
      }
      EvalResult placeholder;
      placeholder.dataset_tag = ds.tag;
      placeholder.model_tag = cell.model;
      placeholder.variant = cell.variant;
      if (!labels) {
        placeholder.absent_reason = label_error;
      } else if (!std::filesystem::exists(cell.embeddings)) {
        placeholder.absent_reason = "embedding file " + cell.embeddings.generic_string() + " not found";
      } else {
        jobs.push_back({&ds, &cell, labels, results.size()});
      }
      if (!placeholder.absent_reason.empty()) {
        warn("cell " + cell_key(ds.tag, cell) + " absent: " + placeholder.absent_reason);
      }
      results.push_back(std::move(placeholder));
    }
  }

  std::size_t parallel = config.jobs ? config.jobs : std::max(1u, std::thread::hardware_concurrency());
  for (std::size_t start = 0; start < jobs.size(); start += parallel) {
    const std::size_t end = std::min(jobs.size(), start + parallel);
    std::vector<std::future<EvalResult>> futures;
    for (std::size_t j = start; j < end; ++j) {
      const Job& job = jobs[j];
      futures.push_back(std::async(std::launch::async, [&config, &cache_dir, job] {
        return run_cell(config, *job.dataset, *job.labels, *job.cell, cache_dir);
      }));
    }
    for (std::size_t j = start; j < end; ++j) results[jobs[j].slot] = futures[j - start].get();
  }

  // Inputs must not have changed while the grid was running.
  const auto after = digest_inputs(config);
  for (std::size_t i = 0; i < std::min(inputs.size(), after.size()); ++i) {
    if (inputs[i].path != after[i].path || inputs[i].sha256 != after[i].sha256) {
      throw Error("input " + inputs[i].path + " changed during the run");
    }
  }
  if (inputs.size() != after.size()) throw Error("input set changed during the run");

  const std::string results_text = results_to_json(results, config_digest).dump(2) + "\n";
  write_text_file(out_dir / "results.json", results_text);
  write_text_file(manifest_path,
                  manifest_json(config_digest, inputs, sha256_hex(results_text)).dump(2) + "\n");
  if (options.write_report) {
    const auto rows = build_delta_rows(results);
    write_text_file(out_dir / "report.csv", render_report_csv(rows));
    write_text_file(out_dir / "report.txt", render_report_text(rows));
  }
  return results;
}

}  // namespace formbench
