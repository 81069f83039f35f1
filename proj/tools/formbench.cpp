// formbench: evaluation toolkit for document-image embeddings.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "formbench/cluster_eval.hpp"
#include "formbench/dataset.hpp"
#include "formbench/error.hpp"
#include "formbench/linear_probe.hpp"
#include "formbench/mask_ops.hpp"
#include "formbench/pipeline.hpp"
#include "formbench/png_io.hpp"
#include "formbench/reducer.hpp"
#include "formbench/seed.hpp"

namespace fs = std::filesystem;
using namespace formbench;
using nlohmann::json;

namespace {

std::vector<std::size_t> parse_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const auto v = std::stoul(item, &used);
    if (used != item.size()) throw Error("bad list item '" + item + "'");
    out.push_back(v);
  }
  return out;
}

void write_json(const json& doc, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

std::vector<fs::path> files_with_extension(const fs::path& dir, const std::string& ext) {
  if (!fs::is_directory(dir)) throw Error(dir.string() + " is not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

Normalization parse_norm(const std::string& s) {
  if (s == "l2") return Normalization::L2;
  if (s == "zscore") return Normalization::ZScore;
  if (s == "none") return Normalization::None;
  throw Error("unknown normalization '" + s + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"formbench: embedding separability benchmarks for document form types"};
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 0;
  std::string config_path;
  std::string out_path;
  app.add_option("--seed", seed, "Master seed");
  app.add_option("--config", config_path, "Run config (JSON)");
  app.add_option("--out", out_path, "Output file or directory");

  // mask-apply
  auto* mask_cmd = app.add_subcommand(
      "mask-apply",
      "Blank everything outside the kept mask classes.\n"
      "Color-coded masks: a pixel takes its dominant channel (red=handwriting,\n"
      "green=printed_text, blue=form_elements) when that channel is >= 128 and\n"
      "exceeds the median channel by >= 64; otherwise it is background.\n"
      "Paletted or gray masks are read as class indices 0..3.");
  std::string images_dir, masks_dir, keep_list = "printed_text,form_elements", encoding = "auto";
  int fill = kWhite;
  mask_cmd->add_option("--images", images_dir, "Directory of 8-bit gray PNG images")->required();
  mask_cmd->add_option("--masks", masks_dir, "Directory of mask PNGs with matching file stems")->required();
  mask_cmd->add_option("--keep", keep_list, "Comma-separated classes to keep");
  mask_cmd->add_option("--fill", fill, "Value for blanked pixels")->check(CLI::Range(0, 255));
  mask_cmd->add_option("--encoding", encoding, "auto, color or indexed")
      ->check(CLI::IsMember({"auto", "color", "indexed"}));

  // reduce
  auto* reduce_cmd = app.add_subcommand("reduce", "UMAP-reduce an embedding file to one or more dimensions");
  std::string emb_path, dims_text = "10,20,30";
  UmapParams umap;
  reduce_cmd->add_option("--embeddings", emb_path, ".femb input")->required();
  reduce_cmd->add_option("--dims", dims_text, "Comma-separated target dimensions");
  reduce_cmd->add_option("--min-dist", umap.min_dist, "UMAP min_dist");
  reduce_cmd->add_option("--spread", umap.spread, "UMAP spread");
  reduce_cmd->add_option("--n-neighbors", umap.n_neighbors, "UMAP graph neighbours");
  reduce_cmd->add_option("--epochs", umap.n_epochs, "Optimisation epochs");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "K-means and leave-one-out KNN on reduced embeddings");
  std::string reduced_dir, labels_path, kmeans_k_text = "auto", norm_text = "l2";
  std::size_t knn_k = 10, trials = 3;
  eval_cmd->add_option("--reduced", reduced_dir, "Directory of reduced .femb files, one per dimension")->required();
  eval_cmd->add_option("--labels", labels_path, "Label CSV")->required();
  eval_cmd->add_option("--knn-k", knn_k, "KNN neighbours");
  eval_cmd->add_option("--kmeans-k", kmeans_k_text, "Cluster count or 'auto'");
  eval_cmd->add_option("--trials", trials, "K-means trials per dimension");
  eval_cmd->add_option("--normalization", norm_text, "l2, zscore or none")
      ->check(CLI::IsMember({"l2", "zscore", "none"}));

  // probe
  auto* probe_cmd = app.add_subcommand("probe", "Linear probe with stratified cross-validation");
  ProbeConfig probe;
  probe_cmd->add_option("--embeddings", emb_path, ".femb input (full dimension)")->required();
  probe_cmd->add_option("--labels", labels_path, "Label CSV")->required();
  probe_cmd->add_option("--folds", probe.folds, "Cross-validation folds");
  probe_cmd->add_option("--epochs", probe.epochs, "Training epochs");
  probe_cmd->add_option("--batch-size", probe.batch_size, "Batch size");
  probe_cmd->add_option("--lr", probe.base_lr, "Base learning rate");
  probe_cmd->add_option("--weight-decay", probe.weight_decay, "Decoupled weight decay");

  // run
  auto* run_cmd = app.add_subcommand("run", "Run the full evaluation grid from a config file");
  bool resume = false;
  std::size_t jobs = 0;
  run_cmd->add_flag("--resume", resume, "Verify the existing manifest before re-running");
  run_cmd->add_option("--jobs", jobs, "Parallel cells (0 = hardware concurrency)");

  // report
  auto* report_cmd = app.add_subcommand("report", "Render No Seg / Seg / delta tables from results JSON");
  std::string results_path;
  report_cmd->add_option("--results", results_path, "results.json from 'run'")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (mask_cmd->parsed()) {
      if (out_path.empty()) throw Error("--out is required");
      const auto keep = KeepSet::parse(keep_list);
      fs::create_directories(out_path);
      std::size_t done = 0;
      for (const auto& img_path : files_with_extension(images_dir, ".png")) {
        const auto mask_path = fs::path(masks_dir) / img_path.filename();
        if (!fs::exists(mask_path)) {
          warn("no mask for " + img_path.string() + "; skipped");
          continue;
        }
        const auto raster = read_png(mask_path);
        MaskEncoding enc = raster.channels == 3 ? MaskEncoding::ColorCoded : MaskEncoding::Indexed;
        if (encoding == "color") enc = MaskEncoding::ColorCoded;
        if (encoding == "indexed") enc = MaskEncoding::Indexed;
        const auto mask = decode_mask(raster, enc);
        const auto image = read_gray_png(img_path);
        write_gray_png(apply_mask(image, mask, keep, static_cast<std::uint8_t>(fill)),
                       fs::path(out_path) / img_path.filename());
        ++done;
      }
      std::cout << "masked " << done << " image(s)\n";
    } else if (reduce_cmd->parsed()) {
      if (out_path.empty()) throw Error("--out is required");
      const auto set = load_embeddings(emb_path);
      const auto dims = parse_list(dims_text);
      fs::create_directories(out_path);
      for (std::size_t di = 0; di < dims.size(); ++di) {
        UmapParams p = umap;
        p.seed = seed_derive(seed, "umap", di);
        const auto reduced = umap_reduce(set, dims[di], p);
        const auto dst = fs::path(out_path) /
                         (fs::path(emb_path).stem().string() + "_d" + std::to_string(dims[di]) + ".femb");
        save_embeddings(reduced.to_embedding_set(), dst);
        std::cout << "wrote " << dst.string() << '\n';
      }
    } else if (eval_cmd->parsed()) {
      if (out_path.empty()) throw Error("--out is required");
      const auto labels = load_labels(labels_path);
      std::vector<Matrix<double>> coords;
      std::vector<int> label_vec;
      std::vector<std::string> files;
      for (const auto& f : files_with_extension(reduced_dir, ".femb")) {
        const auto set = load_embeddings(f);
        auto aligned = align(set, labels);
        if (!label_vec.empty() && aligned.labels != label_vec) {
          throw Error(f.string() + ": row order differs from the other reductions");
        }
        label_vec = std::move(aligned.labels);
        coords.push_back(std::move(aligned.features));
        files.push_back(f.filename().string());
      }
      if (coords.empty()) throw Error("no .femb files in " + reduced_dir);
      const std::size_t k = kmeans_k_text == "auto" ? labels.num_classes() : std::stoul(kmeans_k_text);
      const auto km = kmeans_eval(coords, label_vec, k, trials, seed_derive(seed, "kmeans", 0),
                                  parse_norm(norm_text));
      const auto knn = knn_eval(coords, label_vec, knn_k);
      json best = json::array();
      for (const auto& b : km.best_per_dim) {
        best.push_back({{"reduction", files[b.dim_index]}, {"trial", b.trial}, {"seed", b.seed},
                        {"inertia", b.inertia}, {"ari", b.ari}, {"v_measure", b.v_measure}});
      }
      write_json({{"reductions", files},
                  {"kmeans",
                   {{"k", k},
                    {"trials", trials},
                    {"ari", {{"mean", km.ari.mean}, {"std", km.ari.std}}},
                    {"v_measure", {{"mean", km.v_measure.mean}, {"std", km.v_measure.std}}},
                    {"best_inertia", best}}},
                  {"knn", {{"k", knn_k}, {"accuracy", knn.accuracy}, {"per_dim", knn.per_dim}}}},
                 out_path);
      std::cout << "ARI " << km.ari.mean << " V " << km.v_measure.mean << " KNN " << knn.accuracy << '\n';
    } else if (probe_cmd->parsed()) {
      if (out_path.empty()) throw Error("--out is required");
      probe.seed = seed;
      const auto set = load_embeddings(emb_path);
      const auto labels = load_labels(labels_path);
      const auto cv = cross_validate(set, labels, probe);
      write_json({{"folds", probe.folds}, {"accuracy", cv.mean_accuracy}, {"per_fold", cv.fold_accuracies}},
                 out_path);
      std::cout << "probe accuracy " << cv.mean_accuracy << '\n';
    } else if (run_cmd->parsed()) {
      if (config_path.empty()) throw Error("--config is required");
      if (out_path.empty()) throw Error("--out is required");
      auto config = load_config(config_path);
      if (app.get_option("--seed")->count() > 0) config.master_seed = seed;
      if (run_cmd->get_option("--jobs")->count() > 0) config.jobs = jobs;
      const auto results = run(config, out_path, RunOptions{resume, true});
      std::size_t present = 0;
      for (const auto& r : results) present += r.present;
      std::cout << "evaluated " << present << " of " << results.size() << " cell(s); results in "
                << out_path << '\n';
    } else if (report_cmd->parsed()) {
      if (out_path.empty()) throw Error("--out is required");
      const auto rows = build_delta_rows(load_results(results_path));
      fs::create_directories(out_path);
      std::ofstream(fs::path(out_path) / "report.csv", std::ios::binary) << render_report_csv(rows);
      const auto text = render_report_text(rows);
      std::ofstream(fs::path(out_path) / "report.txt", std::ios::binary) << text;
      std::cout << text;
    }
  } catch (const std::exception& e) {
    std::cerr << "formbench: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
