#include "formbench/dataset.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "formbench/error.hpp"

namespace formbench {

static_assert(std::endian::native == std::endian::little,
              "femb I/O assumes a little-endian host");

std::string_view to_string(Variant v) noexcept {
  return v == Variant::Seg ? "Seg" : "NoSeg";
}

Variant parse_variant(std::string_view text) {
  if (text == "NoSeg" || text == "noseg" || text == "no_seg") return Variant::NoSeg;
  if (text == "Seg" || text == "seg") return Variant::Seg;
  throw Error("unknown variant '" + std::string(text) + "' (expected NoSeg or Seg)");
}

// ---------------------------------------------------------------------------
// Labels

LabelTable::LabelTable(std::vector<LabelEntry> entries) : entries_(std::move(entries)) {
  int max_label = -1;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (e.id.value.empty()) throw Error("label entry " + std::to_string(i) + " has an empty id");
    if (e.label < 0) throw Error("id '" + e.id.value + "' has negative label index");
    if (!index_.emplace(e.id, i).second) throw Error("duplicate id '" + e.id.value + "'");
    max_label = std::max(max_label, e.label);
  }
  const auto k = static_cast<std::size_t>(max_label + 1);
  names_.assign(k, std::string());
  std::vector<bool> seen(k, false);
  for (const auto& e : entries_) {
    if (!seen[e.label]) {
      seen[e.label] = true;
      names_[e.label] = e.label_name;
    } else if (names_[e.label] != e.label_name) {
      throw Error("class " + std::to_string(e.label) + " has conflicting names '" +
                  names_[e.label] + "' and '" + e.label_name + "'");
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (!seen[c]) throw Error("class indices are not contiguous: " + std::to_string(c) + " missing");
  }
  if (k < 2) throw Error("label table needs at least 2 classes, found " + std::to_string(k));
  const auto counts = class_counts();
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] < 2) {
      throw Error("class " + std::to_string(c) + " ('" + names_[c] +
                  "') has fewer than 2 members");
    }
  }
}

std::vector<std::size_t> LabelTable::class_counts() const {
  std::vector<std::size_t> counts(names_.size(), 0);
  for (const auto& e : entries_) ++counts[e.label];
  return counts;
}

std::optional<int> LabelTable::label_of(const SampleId& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return entries_[it->second].label;
}

std::vector<int> LabelTable::labels() const {
  std::vector<int> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.label);
  return out;
}

LabelTable parse_labels(std::istream& in, std::string_view source) {
  const std::string where(source);
  std::string line;
  if (!std::getline(in, line)) throw Error(where + ": empty label file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  if (line != "id,label_index,label_name") {
    throw Error(where + ": bad header '" + line + "' (expected id,label_index,label_name)");
  }
  std::vector<LabelEntry> entries;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos) {
      throw Error(where + ":" + std::to_string(lineno) + ": malformed row '" + line + "'");
    }
    LabelEntry e;
    e.id.value = line.substr(0, c1);
    const auto index_text = line.substr(c1 + 1, c2 - c1 - 1);
    e.label_name = line.substr(c2 + 1);
    std::size_t used = 0;
    long value = -1;
    try {
      value = std::stol(index_text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != index_text.size() || value < 0 || value > 1'000'000) {
      throw Error(where + ":" + std::to_string(lineno) + ": bad label_index '" + index_text + "'");
    }
    if (e.id.value.empty()) {
      throw Error(where + ":" + std::to_string(lineno) + ": empty id");
    }
    e.label = static_cast<int>(value);
    entries.push_back(std::move(e));
  }
  try {
    return LabelTable(std::move(entries));
  } catch (const Error& err) {
    throw Error(where + ": " + err.what());
  }
}

LabelTable load_labels(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open label file " + path.string());
  return parse_labels(in, path.string());
}

// ---------------------------------------------------------------------------
// Embeddings

void EmbeddingSet::validate() const {
  if (ids.size() != data.rows()) {
    throw Error("embedding set has " + std::to_string(data.rows()) + " rows but " +
                std::to_string(ids.size()) + " ids");
  }
  if (data.cols() == 0) throw Error("embedding dimension must be positive");
  std::unordered_set<SampleId, SampleIdHash> seen;
  for (const auto& id : ids) {
    if (id.value.empty()) throw Error("embedding set contains an empty id");
    if (id.value.find('\n') != std::string::npos) {
      throw Error("id '" + id.value + "' contains a newline");
    }
    if (!seen.insert(id).second) throw Error("duplicate embedding id '" + id.value + "'");
  }
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (float v : data.row(r)) {
      if (!std::isfinite(v)) {
        throw Error("non-finite value in embedding row " + std::to_string(r) + " (id '" +
                    ids[r].value + "')");
      }
    }
  }
}

std::optional<std::size_t> expected_dim(std::string_view tag) {
  if (tag == "ResNet50") return 2048;
  if (tag == "ResNet18") return 512;
  if (tag == "CLIP-ViT-B/32" || tag == "CLIP-B/32") return 512;
  if (tag.starts_with("DiT") || tag.starts_with("MAE") || tag.starts_with("ViT-MAE")) return 768;
  return std::nullopt;
}

void check_model_dim(const EmbeddingSet& set) {
  if (auto d = expected_dim(set.model_tag); d && *d != set.dim()) {
    throw Error("model '" + set.model_tag + "' produces " + std::to_string(*d) +
                "-dimensional embeddings but the file has D=" + std::to_string(set.dim()));
  }
}

namespace {

template <typename T>
T read_le(const unsigned char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

}  // namespace

EmbeddingSet read_embeddings(std::istream& in, std::string_view source) {
  const std::string where(source);
  unsigned char header[kFembHeaderSize];
  if (!in.read(reinterpret_cast<char*>(header), kFembHeaderSize)) {
    throw Error(where + ": truncated header");
  }
  if (std::memcmp(header, "FEMB", 4) != 0) throw Error(where + ": bad magic (expected FEMB)");
  const auto version = read_le<std::uint16_t>(header + 4);
  if (version != kFembVersion) {
    throw Error(where + ": unsupported version " + std::to_string(version));
  }
  for (std::size_t i = 6; i < kFembHeaderSize; ++i) {
    if ((i < 8 || i >= 24) && header[i] != 0) {
      throw Error(where + ": nonzero reserved header byte at offset " + std::to_string(i));
    }
  }
  const auto n = read_le<std::uint64_t>(header + 8);
  const auto d = read_le<std::uint64_t>(header + 16);
  if (d == 0) throw Error(where + ": declared D=0");
  if (n > (std::uint64_t{1} << 32) || d > (std::uint64_t{1} << 24)) {
    throw Error(where + ": implausible shape N=" + std::to_string(n) + " D=" + std::to_string(d));
  }

  std::vector<float> values(n * d);
  const auto payload = static_cast<std::streamsize>(values.size() * sizeof(float));
  in.read(reinterpret_cast<char*>(values.data()), payload);
  if (in.gcount() != payload) {
    throw Error(where + ": truncated payload: declared N=" + std::to_string(n) + " D=" +
                std::to_string(d) + " needs " + std::to_string(payload) + " bytes, got " +
                std::to_string(in.gcount()));
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw Error(where + ": non-finite value in row " + std::to_string(i / d));
    }
  }

  EmbeddingSet set;
  set.data = Matrix<float>(n, d, std::move(values));
  set.ids.reserve(n);
  std::string line;
  for (std::uint64_t i = 0; i < n; ++i) {
    if (!std::getline(in, line) || in.eof()) {
      throw Error(where + ": truncated id list: expected " + std::to_string(n) + " ids, got " +
                  std::to_string(i));
    }
    set.ids.push_back(SampleId{line});
  }
  if (in.peek() != std::char_traits<char>::eof()) throw Error(where + ": trailing bytes after ids");
  try {
    set.validate();
  } catch (const Error& err) {
    throw Error(where + ": " + err.what());
  }
  return set;
}

EmbeddingSet load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open embedding file " + path.string());
  return read_embeddings(in, path.string());
}

void write_embeddings(const EmbeddingSet& set, std::ostream& out) {
  set.validate();
  unsigned char header[kFembHeaderSize] = {};
  std::memcpy(header, "FEMB", 4);
  const std::uint16_t version = kFembVersion;
  const std::uint64_t n = set.size();
  const std::uint64_t d = set.dim();
  std::memcpy(header + 4, &version, sizeof version);
  std::memcpy(header + 8, &n, sizeof n);
  std::memcpy(header + 16, &d, sizeof d);
  out.write(reinterpret_cast<const char*>(header), kFembHeaderSize);
  const auto values = set.data.values();
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(float)));
  for (const auto& id : set.ids) out << id.value << '\n';
  if (!out) throw Error("failed writing embedding stream");
}

void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot create " + tmp.string());
    write_embeddings(set, out);
    out.close();
    if (!out) throw Error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

AlignedData align(const EmbeddingSet& set, const LabelTable& labels) {
  AlignedData out;
  out.features = set.data.cast<double>();
  out.labels.reserve(set.size());
  std::vector<std::string> missing;
  for (const auto& id : set.ids) {
    if (auto label = labels.label_of(id)) {
      out.labels.push_back(*label);
    } else {
      missing.push_back(id.value);
    }
  }
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << missing.size() << " embedding id(s) missing from labels:";
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) msg << ' ' << missing[i];
    if (missing.size() > 20) msg << " ...";
    throw Error(msg.str());
  }
  return out;
}

}  // namespace formbench
