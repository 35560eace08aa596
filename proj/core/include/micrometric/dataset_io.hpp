#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "micrometric/image.hpp"

namespace micrometric {

// Persisted pixel formats. Formats are deliberately minimal; anything not
// listed fails loudly at load time.
//   raw_float: 16-byte header (magic "MFR1", u32 height, u32 width, u32
//              reserved, little-endian) then height*width float32 LE.
//   pgm16:     binary "P5" with maxval 65535, big-endian samples.
//   tiff16:    uncompressed single-strip grayscale TIFF, 16-bit.
enum class ImageFormat { raw_float, pgm16, tiff16 };

const char* image_format_name(ImageFormat format);
ImageFormat image_format_from_name(std::string_view name);
const char* image_format_extension(ImageFormat format);

// Decodes by extension-independent magic sniffing: PGM ("P5", 8- or 16-bit),
// raw float ("MFR1"), or TIFF (II/MM; uncompressed, single-strip, grayscale,
// 8/16-bit, either endianness). The source bit depth is recorded on the
// image (32 for raw_float). Throws FormatError naming the offending feature.
Image load_image(const std::filesystem::path& path);

// Integer formats require every value to be integral and within [0, maxval];
// out-of-range data is an error, never clipped. raw_float stores the values
// rounded to float32.
void save_image(const Image& img, const std::filesystem::path& path, ImageFormat format);

struct PairEntry {
  std::string id;
  std::filesystem::path gt_path;
  std::filesystem::path pred_path;
};

// Ordered list of (ground truth, prediction) pairs. Relative paths resolve
// against `root` (the manifest's directory by default).
struct PairManifest {
  std::vector<PairEntry> entries;
  std::filesystem::path root;
};

// Line-oriented JSON, one {"id":..., "gt":..., "pred":...} object per line.
// Duplicate ids, malformed lines and unresolvable paths raise ParseError with
// the line number.
PairManifest load_manifest(const std::filesystem::path& path);

// Writes entries with paths as given (callers pass paths relative to the
// manifest's directory when portability matters).
void save_manifest(const PairManifest& manifest, const std::filesystem::path& path);

}  // namespace micrometric
