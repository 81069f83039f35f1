#include "formbench/mask_ops.hpp"

#include <algorithm>
#include <array>

#include "formbench/error.hpp"

namespace formbench {

std::string_view to_string(MaskClass c) noexcept {
  switch (c) {
    case MaskClass::Background: return "background";
    case MaskClass::Handwriting: return "handwriting";
    case MaskClass::PrintedText: return "printed_text";
    case MaskClass::FormElements: return "form_elements";
  }
  return "background";
}

MaskClass parse_mask_class(std::string_view name) {
  for (unsigned i = 0; i < kNumMaskClasses; ++i) {
    const auto c = static_cast<MaskClass>(i);
    if (name == to_string(c)) return c;
  }
  throw Error("unknown mask class '" + std::string(name) +
              "' (expected background, handwriting, printed_text or form_elements)");
}

GrayImage::GrayImage(std::size_t w, std::size_t h, std::vector<std::uint8_t> px)
    : width(w), height(h), pixels(std::move(px)) {
  if (pixels.size() != w * h) throw Error("gray image pixel count does not match width*height");
}

MaskClass classify_color(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept {
  std::array<int, 3> v{r, g, b};
  const auto max_it = std::max_element(v.begin(), v.end());
  const int dominant = static_cast<int>(max_it - v.begin());
  std::array<int, 3> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  const int max = sorted[2];
  const int median = sorted[1];
  if (max < kColorMinValue || max - median < kColorMinMargin) return MaskClass::Background;
  static constexpr std::array<MaskClass, 3> by_channel{
      MaskClass::Handwriting, MaskClass::PrintedText, MaskClass::FormElements};
  return by_channel[dominant];
}

SegMask decode_mask(const Raster& raster, MaskEncoding encoding) {
  if (raster.width == 0 || raster.height == 0) throw Error("mask raster has a zero dimension");
  if (raster.data.size() != raster.width * raster.height * raster.channels) {
    throw Error("mask raster size does not match its dimensions");
  }
  SegMask mask{raster.width, raster.height, {}};
  const std::size_t n = raster.width * raster.height;
  mask.classes.resize(n);
  if (encoding == MaskEncoding::ColorCoded) {
    if (raster.channels != 3) throw Error("color-coded masks need 3 channels");
    for (std::size_t i = 0; i < n; ++i) {
      const auto* p = &raster.data[3 * i];
      mask.classes[i] = classify_color(p[0], p[1], p[2]);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const auto v = raster.data[raster.channels * i];
      if (v >= kNumMaskClasses) {
        throw Error("indexed mask value " + std::to_string(v) + " at pixel (" +
                    std::to_string(i % raster.width) + ", " + std::to_string(i / raster.width) +
                    ") is outside 0..3");
      }
      mask.classes[i] = static_cast<MaskClass>(v);
    }
  }
  return mask;
}

KeepSet KeepSet::parse(std::string_view list) {
  KeepSet keep;
  while (!list.empty()) {
    const auto comma = list.find(',');
    auto item = list.substr(0, comma);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) keep.insert(parse_mask_class(item));
    if (comma == std::string_view::npos) break;
    list.remove_prefix(comma + 1);
  }
  return keep;
}

GrayImage apply_mask(const GrayImage& image, const SegMask& mask, KeepSet keep,
                     std::uint8_t fill) {
  if (image.width != mask.width || image.height != mask.height) {
    throw Error("image is " + std::to_string(image.width) + "x" + std::to_string(image.height) +
                " but mask is " + std::to_string(mask.width) + "x" + std::to_string(mask.height));
  }
  GrayImage out = image;
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    if (!keep.contains(mask.classes[i])) out.pixels[i] = fill;
  }
  return out;
}

}  // namespace formbench
