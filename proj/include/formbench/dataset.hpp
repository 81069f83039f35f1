#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "formbench/matrix.hpp"

namespace formbench {

/// Identifier of one sample; the file stem of its source image.
struct SampleId {
  std::string value;

  friend auto operator<=>(const SampleId&, const SampleId&) = default;
};

struct SampleIdHash {
  std::size_t operator()(const SampleId& id) const noexcept {
    return std::hash<std::string>{}(id.value);
  }
};

enum class Variant { NoSeg, Seg };

std::string_view to_string(Variant v) noexcept;
Variant parse_variant(std::string_view text);

struct LabelEntry {
  SampleId id;
  int label = 0;
  std::string label_name;
};

/// Validated ground-truth labels. Class indices are contiguous 0..K-1 with
/// at least two classes and at least two members per class.
class LabelTable {
 public:
  /// Validates and takes ownership of `entries`. Throws Error naming the
  /// offending id or class.
  explicit LabelTable(std::vector<LabelEntry> entries);

  const std::vector<LabelEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t num_classes() const noexcept { return names_.size(); }
  const std::string& class_name(int label) const { return names_.at(label); }
  std::vector<std::size_t> class_counts() const;
  std::optional<int> label_of(const SampleId& id) const;
  std::vector<int> labels() const;

 private:
  std::vector<LabelEntry> entries_;
  std::vector<std::string> names_;
  std::unordered_map<SampleId, std::size_t, SampleIdHash> index_;
};

/// Parses the label CSV (`id,label_index,label_name`). `source` is used in
/// error messages.
LabelTable parse_labels(std::istream& in, std::string_view source = "<stream>");
LabelTable load_labels(const std::filesystem::path& path);

/// N x D float32 feature matrix with one id per row.
///
/// The `.femb` file carries no model or variant metadata; `model_tag` and
/// `variant` are supplied by whoever loads the file.
struct EmbeddingSet {
  std::vector<SampleId> ids;
  Matrix<float> data;
  std::string model_tag;
  Variant variant = Variant::NoSeg;

  std::size_t size() const noexcept { return data.rows(); }
  std::size_t dim() const noexcept { return data.cols(); }

  /// Checks shape, id uniqueness and finiteness.
  void validate() const;
};

/// Embedding width of a known producing model, or nullopt for unknown tags.
std::optional<std::size_t> expected_dim(std::string_view model_tag);

/// Fails if the dimension contradicts a known model tag.
void check_model_dim(const EmbeddingSet& set);

inline constexpr std::size_t kFembHeaderSize = 64;
inline constexpr std::uint16_t kFembVersion = 1;

EmbeddingSet read_embeddings(std::istream& in, std::string_view source = "<stream>");
EmbeddingSet load_embeddings(const std::filesystem::path& path);
void write_embeddings(const EmbeddingSet& set, std::ostream& out);
/// Writes to a sibling temp file and renames it into place.
void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path);

struct AlignedData {
  Matrix<double> features;
  std::vector<int> labels;
};

/// Pairs each embedding row with its label, preserving the row order of
/// `set`. Throws Error listing every id absent from `labels`.
AlignedData align(const EmbeddingSet& set, const LabelTable& labels);

}  // namespace formbench
