#include <algorithm>
#include <climits>
#include <tuple>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "formbench/error.hpp"
#include "formbench/pipeline.hpp"

namespace formbench {

const std::vector<std::string>& report_metrics() {
  static const std::vector<std::string> metrics{"kmeans_ari", "kmeans_v_measure", "knn_accuracy",
                                                "probe_accuracy"};
  return metrics;
}

namespace {

std::optional<double> metric_value(const EvalResult& r, const std::string& metric) {
  if (!r.present) return std::nullopt;
  if (metric == "kmeans_ari") return r.kmeans_ari.mean;
  if (metric == "kmeans_v_measure") return r.kmeans_v.mean;
  if (metric == "knn_accuracy") return r.knn_accuracy;
  if (metric == "probe_accuracy" && r.has_probe) return r.probe_accuracy;
  return std::nullopt;
}

// Ties in the rendered precision share the bold mark.
long rounded_thousandths(double v) { return std::lround(v * 1000.0); }

std::string metric_title(const std::string& metric) {
  if (metric == "kmeans_ari") return "K-Means ARI";
  if (metric == "kmeans_v_measure") return "K-Means V-Measure";
  if (metric == "knn_accuracy") return "KNN Accuracy";
  return "Linear Probe Accuracy";
}

}  // namespace

std::vector<DeltaRow> build_delta_rows(const std::vector<EvalResult>& results) {
  std::vector<std::string> datasets;
  std::map<std::string, std::vector<std::string>> models;
  std::map<std::tuple<std::string, std::string, Variant>, const EvalResult*> index;
  for (const auto& r : results) {
    if (std::find(datasets.begin(), datasets.end(), r.dataset_tag) == datasets.end()) {
      datasets.push_back(r.dataset_tag);
    }
    auto& m = models[r.dataset_tag];
    if (std::find(m.begin(), m.end(), r.model_tag) == m.end()) m.push_back(r.model_tag);
    index[{r.dataset_tag, r.model_tag, r.variant}] = &r;
  }

  std::vector<DeltaRow> rows;
  for (const auto& ds : datasets) {
    const std::size_t first = rows.size();
    for (const auto& model : models[ds]) {
      for (const auto& metric : report_metrics()) {
        DeltaRow row{ds, model, metric, std::nullopt, std::nullopt, std::nullopt, false, false};
        if (auto it = index.find({ds, model, Variant::NoSeg}); it != index.end()) {
          row.no_seg = metric_value(*it->second, metric);
        }
        if (auto it = index.find({ds, model, Variant::Seg}); it != index.end()) {
          row.seg = metric_value(*it->second, metric);
        }
        if (row.no_seg && row.seg) row.delta = *row.seg - *row.no_seg;
        rows.push_back(std::move(row));
      }
    }
    for (const auto& metric : report_metrics()) {
      long best_no = LONG_MIN, best_seg = LONG_MIN;
      for (std::size_t i = first; i < rows.size(); ++i) {
        if (rows[i].metric != metric) continue;
        if (rows[i].no_seg) best_no = std::max(best_no, rounded_thousandths(*rows[i].no_seg));
        if (rows[i].seg) best_seg = std::max(best_seg, rounded_thousandths(*rows[i].seg));
      }
      for (std::size_t i = first; i < rows.size(); ++i) {
        if (rows[i].metric != metric) continue;
        rows[i].best_no_seg = rows[i].no_seg && rounded_thousandths(*rows[i].no_seg) == best_no;
        rows[i].best_seg = rows[i].seg && rounded_thousandths(*rows[i].seg) == best_seg;
      }
    }
  }
  check_deltas(rows);
  return rows;
}

void check_deltas(const std::vector<DeltaRow>& rows) {
  for (const auto& r : rows) {
    const bool both = r.no_seg && r.seg;
    if (both != r.delta.has_value() || (both && *r.delta != *r.seg - *r.no_seg)) {
      throw Error("delta for " + r.dataset_tag + "/" + r.model_tag + "/" + r.metric +
                  " is not seg - no_seg");
    }
  }
}

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string format_delta(double v, bool ascii) {
  const long t = std::lround(v * 1000.0);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%ld.%03ld", std::labs(t) / 1000, std::labs(t) % 1000);
  if (t >= 0) return std::string("+") + buf;
  return std::string(ascii ? "-" : "−") + buf;
}

std::string render_report_text(const std::vector<DeltaRow>& rows) {
  std::ostringstream out;
  const auto& metrics = report_metrics();
  std::size_t i = 0;
  bool first_table = true;
  while (i < rows.size()) {
    const std::string ds = rows[i].dataset_tag;
    if (!first_table) out << '\n';
    first_table = false;
    out << "## " << ds << "\n\n| Model";
    for (const auto& m : metrics) {
      const auto title = metric_title(m);
      out << " | " << title << " No Seg | " << title << " Seg | " << title << " Δ Seg";
    }
    out << " |\n|---";
    for (std::size_t c = 0; c < metrics.size() * 3; ++c) out << "|---:";
    out << "|\n";
    while (i < rows.size() && rows[i].dataset_tag == ds) {
      const std::string model = rows[i].model_tag;
      out << "| " << model;
      for (; i < rows.size() && rows[i].dataset_tag == ds && rows[i].model_tag == model; ++i) {
        const auto& r = rows[i];
        auto cell = [](const std::optional<double>& v, bool bold) {
          if (!v) return std::string("n/a");
          return bold ? "**" + format_value(*v) + "**" : format_value(*v);
        };
        out << " | " << cell(r.no_seg, r.best_no_seg) << " | " << cell(r.seg, r.best_seg) << " | "
            << (r.delta ? format_delta(*r.delta) : std::string("n/a"));
      }
      out << " |\n";
    }
  }
  return out.str();
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string render_report_csv(const std::vector<DeltaRow>& rows) {
  std::ostringstream out;
  out << "dataset,model,metric,no_seg,seg,delta,delta_display,best_no_seg,best_seg\n";
  auto num = [](const std::optional<double>& v) {
    if (!v) return std::string();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", *v);
    return std::string(buf);
  };
  for (const auto& r : rows) {
    out << csv_field(r.dataset_tag) << ',' << csv_field(r.model_tag) << ',' << r.metric << ',' << num(r.no_seg) << ','
        << num(r.seg) << ',' << num(r.delta) << ',' << (r.delta ? format_delta(*r.delta, true) : "")
        << ',' << (r.best_no_seg ? 1 : 0) << ',' << (r.best_seg ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace formbench
