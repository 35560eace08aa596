#include "micrometric/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "micrometric/errors.hpp"

namespace micrometric {

namespace {

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open file: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

void write_all(const std::filesystem::path& path, const void* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open file for writing: " + path.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) throw FormatError("failed writing file: " + path.string());
}

// ---- PGM ----

Image load_pgm(const std::vector<unsigned char>& bytes, const std::filesystem::path& path) {
  std::size_t pos = 2;  // past "P5"
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (std::isspace(bytes[pos])) {
        ++pos;
      } else if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() -> long {
    skip_space();
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) {
      throw FormatError("malformed PGM header: " + path.string());
    }
    long v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos] - '0');
      ++pos;
    }
    return v;
  };
  const long width = read_int();
  const long height = read_int();
  const long maxval = read_int();
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw FormatError("malformed PGM header: " + path.string());
  ++pos;  // single whitespace before payload
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535) {
    throw FormatError("unsupported PGM geometry or maxval: " + path.string());
  }
  const bool two_byte = maxval > 255;
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  const std::size_t need = n * (two_byte ? 2 : 1);
  if (bytes.size() - pos < need) throw FormatError("truncated PGM payload: " + path.string());

  std::vector<double> pixels(n);
  if (two_byte) {
    // PGM 16-bit samples are big-endian.
    for (std::size_t i = 0; i < n; ++i) {
      pixels[i] = static_cast<double>((static_cast<unsigned>(bytes[pos + 2 * i]) << 8) | bytes[pos + 2 * i + 1]);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) pixels[i] = static_cast<double>(bytes[pos + i]);
  }
  Image img(static_cast<int>(height), static_cast<int>(width), std::move(pixels));
  img.set_bit_depth(two_byte ? 16 : 8);
  return img;
}

void save_pgm16(const Image& img, const std::filesystem::path& path) {
  constexpr long maxval = 65535;
  for (const double v : img.pixels()) {
    if (!(v >= 0.0) || v > maxval || v != std::floor(v)) {
      throw std::invalid_argument("pgm16 requires integral values in [0, 65535], got " + std::to_string(v));
    }
  }
  std::ostringstream header;
  header << "P5\n" << img.width() << " " << img.height() << "\n" << maxval << "\n";
  const std::string h = header.str();
  std::vector<unsigned char> bytes(h.begin(), h.end());
  bytes.reserve(bytes.size() + img.size() * 2);
  for (const double v : img.pixels()) {
    const auto u = static_cast<std::uint16_t>(v);
    bytes.push_back(static_cast<unsigned char>(u >> 8));
    bytes.push_back(static_cast<unsigned char>(u & 0xff));
  }
  write_all(path, bytes.data(), bytes.size());
}

// ---- raw float ("MFR1") ----

Image load_raw_float(const std::vector<unsigned char>& bytes, const std::filesystem::path& path) {
  if (bytes.size() < 16) throw FormatError("truncated raw-float header: " + path.string());
  auto u32 = [&](std::size_t off) {
    return static_cast<std::uint32_t>(bytes[off]) | (static_cast<std::uint32_t>(bytes[off + 1]) << 8) |
           (static_cast<std::uint32_t>(bytes[off + 2]) << 16) | (static_cast<std::uint32_t>(bytes[off + 3]) << 24);
  };
  const std::uint32_t height = u32(4);
  const std::uint32_t width = u32(8);
  if (height == 0 || width == 0 || height > (1u << 20) || width > (1u << 20)) {
    throw FormatError("implausible raw-float dimensions: " + path.string());
  }
  const std::size_t n = static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  if (bytes.size() - 16 < n * 4) throw FormatError("truncated raw-float payload: " + path.string());
  std::vector<double> pixels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t raw = u32(16 + 4 * i);
    float f;
    std::memcpy(&f, &raw, sizeof(f));
    pixels[i] = static_cast<double>(f);
  }
  Image img(static_cast<int>(height), static_cast<int>(width), std::move(pixels));
  img.set_bit_depth(32);
  return img;
}

void save_raw_float(const Image& img, const std::filesystem::path& path) {
  std::vector<unsigned char> bytes;
  bytes.reserve(16 + img.size() * 4);
  auto push_u32 = [&](std::uint32_t v) {
    bytes.push_back(static_cast<unsigned char>(v & 0xff));
    bytes.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    bytes.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    bytes.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
  };
  bytes.push_back('M');
  bytes.push_back('F');
  bytes.push_back('R');
  bytes.push_back('1');
  push_u32(static_cast<std::uint32_t>(img.height()));
  push_u32(static_cast<std::uint32_t>(img.width()));
  push_u32(0);
  for (const double v : img.pixels()) {
    const auto f = static_cast<float>(v);
    std::uint32_t raw;
    std::memcpy(&raw, &f, sizeof(raw));
    push_u32(raw);
  }
  write_all(path, bytes.data(), bytes.size());
}

// ---- TIFF (uncompressed, single strip, grayscale) ----

struct TiffReader {
  const std::vector<unsigned char>& bytes;
  bool big_endian;

  std::uint16_t u16(std::size_t off) const {
    if (off + 2 > bytes.size()) throw FormatError("truncated TIFF");
    return big_endian ? static_cast<std::uint16_t>((bytes[off] << 8) | bytes[off + 1])
                      : static_cast<std::uint16_t>(bytes[off] | (bytes[off + 1] << 8));
  }
  std::uint32_t u32(std::size_t off) const {
    if (off + 4 > bytes.size()) throw FormatError("truncated TIFF");
    return big_endian ? (static_cast<std::uint32_t>(bytes[off]) << 24) |
                            (static_cast<std::uint32_t>(bytes[off + 1]) << 16) |
                            (static_cast<std::uint32_t>(bytes[off + 2]) << 8) | bytes[off + 3]
                      : static_cast<std::uint32_t>(bytes[off]) | (static_cast<std::uint32_t>(bytes[off + 1]) << 8) |
                            (static_cast<std::uint32_t>(bytes[off + 2]) << 16) |
                            (static_cast<std::uint32_t>(bytes[off + 3]) << 24);
  }
};

// TIFF tags this loader understands.
enum : std::uint16_t {
  kTagImageWidth = 256,
  kTagImageLength = 257,
  kTagBitsPerSample = 258,
  kTagCompression = 259,
  kTagPhotometric = 262,
  kTagStripOffsets = 273,
  kTagSamplesPerPixel = 277,
  kTagRowsPerStrip = 278,
  kTagStripByteCounts = 279,
  kTagTileWidth = 322,
  kTagTileLength = 323,
  kTagSampleFormat = 339,
};

struct TiffEntry {
  std::uint16_t type = 0;
  std::uint32_t count = 0;
  std::uint32_t value = 0;  // first value (SHORT/LONG), or offset for larger payloads
  std::uint32_t raw_offset = 0;
};

Image load_tiff(const std::vector<unsigned char>& bytes, const std::filesystem::path& path) {
  if (bytes.size() < 8) throw FormatError("truncated TIFF header: " + path.string());
  const bool big_endian = bytes[0] == 'M';
  TiffReader rd{bytes, big_endian};
  if (rd.u16(2) != 42) throw FormatError("bad TIFF magic: " + path.string());
  const std::uint32_t ifd_off = rd.u32(4);
  const std::uint16_t n_entries = rd.u16(ifd_off);

  auto entry_value = [&](const TiffEntry& e) -> std::uint32_t {
    // SHORT (3) and LONG (4) single values live inline in the value field.
    if (e.type == 3) return rd.u16(e.raw_offset + 8);
    if (e.type == 4) return rd.u32(e.raw_offset + 8);
    throw FormatError("unsupported TIFF entry type " + std::to_string(e.type) + ": " + path.string());
  };

  std::uint32_t width = 0, height = 0, bits = 1, compression = 1, photometric = 0;
  std::uint32_t samples = 1, rows_per_strip = 0xffffffffu, sample_format = 1;
  std::uint32_t strip_offset = 0, strip_count = 0, byte_count = 0;
  bool tiled = false;
  std::uint32_t bits_count = 1;

  for (std::uint16_t i = 0; i < n_entries; ++i) {
    const std::size_t off = ifd_off + 2 + static_cast<std::size_t>(i) * 12;
    TiffEntry e;
    e.raw_offset = static_cast<std::uint32_t>(off);
    const std::uint16_t tag = rd.u16(off);
    e.type = rd.u16(off + 2);
    e.count = rd.u32(off + 4);
    switch (tag) {
      case kTagImageWidth: width = entry_value(e); break;
      case kTagImageLength: height = entry_value(e); break;
      case kTagBitsPerSample:
        bits_count = e.count;
        if (e.count == 1) bits = entry_value(e);
        break;
      case kTagCompression: compression = entry_value(e); break;
      case kTagPhotometric: photometric = entry_value(e); break;
      case kTagStripOffsets:
        strip_count = e.count;
        if (e.count == 1) strip_offset = entry_value(e);
        break;
      case kTagSamplesPerPixel: samples = entry_value(e); break;
      case kTagRowsPerStrip: rows_per_strip = entry_value(e); break;
      case kTagStripByteCounts:
        if (e.count == 1) byte_count = entry_value(e);
        break;
      case kTagTileWidth:
      case kTagTileLength: tiled = true; break;
      case kTagSampleFormat: sample_format = entry_value(e); break;
      default: break;  // ignore ancillary tags
    }
  }
  const std::uint32_t next_ifd = rd.u32(ifd_off + 2 + static_cast<std::size_t>(n_entries) * 12);

  if (tiled) throw FormatError("unsupported TIFF feature (tiled layout): " + path.string());
  if (compression != 1) {
    throw FormatError("unsupported TIFF feature (compression=" + std::to_string(compression) + "): " + path.string());
  }
  if (samples != 1 || bits_count != 1) {
    throw FormatError("unsupported TIFF feature (multi-channel, samples=" + std::to_string(samples) + "): " +
                      path.string());
  }
  if (photometric > 1) {
    throw FormatError("unsupported TIFF feature (photometric=" + std::to_string(photometric) + "): " + path.string());
  }
  if (bits != 8 && bits != 16) {
    throw FormatError("unsupported TIFF feature (bits-per-sample=" + std::to_string(bits) + "): " + path.string());
  }
  if (sample_format != 1) {
    throw FormatError("unsupported TIFF feature (sample-format=" + std::to_string(sample_format) + "): " +
                      path.string());
  }
  if (strip_count != 1 || (rows_per_strip < height && rows_per_strip != 0xffffffffu)) {
    throw FormatError("unsupported TIFF feature (multi-strip layout): " + path.string());
  }
  if (next_ifd != 0) throw FormatError("unsupported TIFF feature (multi-page): " + path.string());
  if (width == 0 || height == 0) throw FormatError("TIFF without dimensions: " + path.string());

  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  const std::size_t need = n * (bits / 8);
  if (byte_count != 0 && byte_count < need) throw FormatError("truncated TIFF strip: " + path.string());
  if (bytes.size() < strip_offset || bytes.size() - strip_offset < need) {
    throw FormatError("truncated TIFF payload: " + path.string());
  }

  std::vector<double> pixels(n);
  if (bits == 16) {
    for (std::size_t i = 0; i < n; ++i) pixels[i] = static_cast<double>(rd.u16(strip_offset + 2 * i));
  } else {
    for (std::size_t i = 0; i < n; ++i) pixels[i] = static_cast<double>(bytes[strip_offset + i]);
  }
  Image img(static_cast<int>(height), static_cast<int>(width), std::move(pixels));
  img.set_bit_depth(static_cast<int>(bits));
  return img;
}

void save_tiff16(const Image& img, const std::filesystem::path& path) {
  constexpr double maxval = 65535.0;
  for (const double v : img.pixels()) {
    if (!(v >= 0.0) || v > maxval || v != std::floor(v)) {
      throw std::invalid_argument("tiff16 requires integral values in [0, 65535], got " + std::to_string(v));
    }
  }
  std::vector<unsigned char> bytes;
  const std::uint16_t n_entries = 10;
  const std::uint32_t ifd_off = 8;
  const std::uint32_t data_off = ifd_off + 2 + n_entries * 12 + 4;
  bytes.reserve(data_off + img.size() * 2);

  auto push_u16 = [&](std::uint16_t v) {
    bytes.push_back(static_cast<unsigned char>(v & 0xff));
    bytes.push_back(static_cast<unsigned char>(v >> 8));
  };
  auto push_u32 = [&](std::uint32_t v) {
    bytes.push_back(static_cast<unsigned char>(v & 0xff));
    bytes.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    bytes.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    bytes.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
  };
  auto push_entry = [&](std::uint16_t tag, std::uint16_t type, std::uint32_t count, std::uint32_t value) {
    push_u16(tag);
    push_u16(type);
    push_u32(count);
    if (type == 3) {  // SHORT packs into the low half, rest zero
      push_u16(static_cast<std::uint16_t>(value));
      push_u16(0);
    } else {
      push_u32(value);
    }
  };

  bytes.push_back('I');
  bytes.push_back('I');
  push_u16(42);
  push_u32(ifd_off);
  push_u16(n_entries);
  push_entry(kTagImageWidth, 4, 1, static_cast<std::uint32_t>(img.width()));
  push_entry(kTagImageLength, 4, 1, static_cast<std::uint32_t>(img.height()));
  push_entry(kTagBitsPerSample, 3, 1, 16);
  push_entry(kTagCompression, 3, 1, 1);
  push_entry(kTagPhotometric, 3, 1, 1);  // BlackIsZero
  push_entry(kTagStripOffsets, 4, 1, data_off);
  push_entry(kTagSamplesPerPixel, 3, 1, 1);
  push_entry(kTagRowsPerStrip, 4, 1, static_cast<std::uint32_t>(img.height()));
  push_entry(kTagStripByteCounts, 4, 1, static_cast<std::uint32_t>(img.size() * 2));
  push_entry(kTagSampleFormat, 3, 1, 1);
  push_u32(0);  // no next IFD
  for (const double v : img.pixels()) push_u16(static_cast<std::uint16_t>(v));
  write_all(path, bytes.data(), bytes.size());
}

}  // namespace

const char* image_format_name(ImageFormat format) {
  switch (format) {
    case ImageFormat::raw_float: return "raw-float";
    case ImageFormat::pgm16: return "pgm16";
    case ImageFormat::tiff16: return "tiff16";
  }
  return "?";
}

ImageFormat image_format_from_name(std::string_view name) {
  if (name == "raw-float" || name == "mfr") return ImageFormat::raw_float;
  if (name == "pgm16" || name == "pgm") return ImageFormat::pgm16;
  if (name == "tiff16" || name == "tiff") return ImageFormat::tiff16;
  throw std::invalid_argument("unknown image format: " + std::string(name));
}

const char* image_format_extension(ImageFormat format) {
  switch (format) {
    case ImageFormat::raw_float: return ".mfr";
    case ImageFormat::pgm16: return ".pgm";
    case ImageFormat::tiff16: return ".tif";
  }
  return "";
}

Image load_image(const std::filesystem::path& path) {
  const std::vector<unsigned char> bytes = read_all(path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return load_pgm(bytes, path);
  if (bytes.size() >= 4 && bytes[0] == 'M' && bytes[1] == 'F' && bytes[2] == 'R' && bytes[3] == '1') {
    return load_raw_float(bytes, path);
  }
  if (bytes.size() >= 4 && ((bytes[0] == 'I' && bytes[1] == 'I') || (bytes[0] == 'M' && bytes[1] == 'M'))) {
    return load_tiff(bytes, path);
  }
  throw FormatError("unknown image format (unrecognized magic bytes): " + path.string());
}

void save_image(const Image& img, const std::filesystem::path& path, ImageFormat format) {
  switch (format) {
    case ImageFormat::raw_float: save_raw_float(img, path); return;
    case ImageFormat::pgm16: save_pgm16(img, path); return;
    case ImageFormat::tiff16: save_tiff16(img, path); return;
  }
  throw std::invalid_argument("save_image: bad format");
}

PairManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open manifest: " + path.string());

  PairManifest manifest;
  manifest.root = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");

  std::string line;
  long line_no = 0;
  std::set<std::string> seen_ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("manifest line is not valid JSON: " + std::string(e.what()), line_no);
    }
    if (!j.is_object() || !j.contains("id") || !j.contains("gt") || !j.contains("pred") || !j["id"].is_string() ||
        !j["gt"].is_string() || !j["pred"].is_string()) {
      throw ParseError("manifest line must be {\"id\":string, \"gt\":string, \"pred\":string}", line_no);
    }
    PairEntry entry;
    entry.id = j["id"].get<std::string>();
    if (!seen_ids.insert(entry.id).second) throw ParseError("duplicate pair id '" + entry.id + "'", line_no);

    auto resolve = [&](const std::string& p) {
      std::filesystem::path fp(p);
      if (fp.is_relative()) fp = manifest.root / fp;
      return fp;
    };
    entry.gt_path = resolve(j["gt"].get<std::string>());
    entry.pred_path = resolve(j["pred"].get<std::string>());
    for (const auto& fp : {entry.gt_path, entry.pred_path}) {
      if (!std::filesystem::exists(fp)) {
        throw ParseError("manifest references a missing file: " + fp.string(), line_no);
      }
    }
    manifest.entries.push_back(std::move(entry));
  }
  return manifest;
}

void save_manifest(const PairManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open manifest for writing: " + path.string());
  for (const PairEntry& e : manifest.entries) {
    nlohmann::ordered_json j;
    j["id"] = e.id;
    j["gt"] = e.gt_path.generic_string();
    j["pred"] = e.pred_path.generic_string();
    out << j.dump() << "\n";
  }
  if (!out) throw FormatError("failed writing manifest: " + path.string());
}

}  // namespace micrometric
