#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace formbench {

enum class MaskClass : std::uint8_t {
  Background = 0,
  Handwriting = 1,
  PrintedText = 2,
  FormElements = 3,
};

inline constexpr std::size_t kNumMaskClasses = 4;

std::string_view to_string(MaskClass c) noexcept;
MaskClass parse_mask_class(std::string_view name);

/// 8-bit luminance image, row-major.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(std::size_t w, std::size_t h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(w * h, fill) {}
  GrayImage(std::size_t w, std::size_t h, std::vector<std::uint8_t> px);

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

/// Interleaved 8-bit raster with 1 (index/gray) or 3 (RGB) channels.
struct Raster {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 3;
  std::vector<std::uint8_t> data;
};

struct SegMask {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<MaskClass> classes;

  friend bool operator==(const SegMask&, const SegMask&) = default;
};

enum class MaskEncoding {
  /// red = handwriting, green = printed text, blue = form elements.
  ColorCoded,
  /// One channel holding the class index 0..3.
  Indexed,
};

/// A pixel is assigned its dominant channel when that channel is at least
/// kColorMinValue and beats the median channel by kColorMinMargin;
/// otherwise it is background.
inline constexpr int kColorMinValue = 128;
inline constexpr int kColorMinMargin = 64;

MaskClass classify_color(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept;

SegMask decode_mask(const Raster& raster, MaskEncoding encoding);

/// Set of mask classes to preserve.
class KeepSet {
 public:
  constexpr KeepSet() = default;
  constexpr KeepSet(std::initializer_list<MaskClass> classes) {
    for (auto c : classes) insert(c);
  }

  /// {printed_text, form_elements}
  static constexpr KeepSet form_structure() {
    return {MaskClass::PrintedText, MaskClass::FormElements};
  }

  /// Parses a comma-separated list of class names.
  static KeepSet parse(std::string_view list);

  constexpr void insert(MaskClass c) { bits_ |= 1u << static_cast<unsigned>(c); }
  constexpr bool contains(MaskClass c) const {
    return (bits_ >> static_cast<unsigned>(c)) & 1u;
  }
  constexpr bool includes(KeepSet other) const { return (bits_ & other.bits_) == other.bits_; }
  constexpr unsigned bits() const { return bits_; }
  static constexpr KeepSet from_bits(unsigned bits) {
    KeepSet k;
    k.bits_ = bits & 0xFu;
    return k;
  }

 private:
  unsigned bits_ = 0;
};

inline constexpr std::uint8_t kWhite = 255;

/// Returns a copy of `image` where pixels whose class is not in `keep` are
/// replaced by `fill`.
GrayImage apply_mask(const GrayImage& image, const SegMask& mask,
                     KeepSet keep = KeepSet::form_structure(), std::uint8_t fill = kWhite);

}  // namespace formbench
