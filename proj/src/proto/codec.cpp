#include "fedplat/proto/codec.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <set>
#include <system_error>

#include "fedplat/util/base64.hpp"
#include "fedplat/util/uuid.hpp"

namespace fedplat::proto {

namespace fs = std::filesystem;
using model::DType;
using model::TensorBlock;

namespace {

static_assert(std::endian::native == std::endian::little, "codec assumes a little-endian host");

constexpr char kMagic[4] = {'F', 'P', 'W', 'T'};
constexpr std::uint32_t kFileVersion = 1;

// NaNs are converted by hand so signaling payloads survive the f32 <-> f64
// trip; the FPU would quiet them.
double widen(std::uint32_t bits) {
  const bool nan = (bits & 0x7f800000u) == 0x7f800000u && (bits & 0x007fffffu) != 0;
  if (!nan) return static_cast<double>(std::bit_cast<float>(bits));
  const std::uint64_t sign = static_cast<std::uint64_t>(bits >> 31) << 63;
  const std::uint64_t mantissa = static_cast<std::uint64_t>(bits & 0x007fffffu) << 29;
  return std::bit_cast<double>(sign | 0x7ff0000000000000ull | mantissa);
}

std::uint32_t narrow(double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  const bool nan = (bits & 0x7ff0000000000000ull) == 0x7ff0000000000000ull &&
                   (bits & 0x000fffffffffffffull) != 0;
  if (!nan) return std::bit_cast<std::uint32_t>(static_cast<float>(v));
  std::uint32_t mantissa = static_cast<std::uint32_t>((bits & 0x000fffffffffffffull) >> 29);
  if (mantissa == 0) mantissa = 0x00400000u;  // payload only in the low bits
  return static_cast<std::uint32_t>(bits >> 63) << 31 | 0x7f800000u | mantissa;
}

std::size_t element_count(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) {
    if (d != 0 && n > std::numeric_limits<std::size_t>::max() / d) {
      throw CodecError("tensor shape overflows");
    }
    n *= d;
  }
  return n;
}

template <typename T>
void append(std::vector<std::uint8_t>& out, T value) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

template <typename T>
T read_at(const std::vector<std::uint8_t>& in, std::size_t offset) {
  T value;
  std::memcpy(&value, in.data() + offset, sizeof(T));
  return value;
}

}  // namespace

std::size_t payload_size(const WeightManifest& manifest) {
  std::size_t total = 0;
  for (const auto& e : manifest) total += element_count(e.shape) * model::dtype_size(e.dtype);
  return total;
}

EncodedWeights encode_weights(const ModelWeights& w) {
  EncodedWeights out;
  for (const auto& b : w.blocks()) out.manifest.push_back({b.name, b.shape, b.dtype});
  out.bytes.reserve(payload_size(out.manifest));
  for (const auto& b : w.blocks()) {
    if (b.dtype == DType::f64) {
      for (double v : b.values) append(out.bytes, std::bit_cast<std::uint64_t>(v));
    } else {
      for (double v : b.values) append(out.bytes, narrow(v));
    }
  }
  return out;
}

ModelWeights decode_weights(const WeightManifest& manifest, const std::vector<std::uint8_t>& bytes) {
  const std::size_t expected = payload_size(manifest);
  if (expected != bytes.size()) {
    throw CodecError("weight payload is " + std::to_string(bytes.size()) + " bytes, manifest needs " +
                     std::to_string(expected));
  }
  std::set<std::string> names;
  std::vector<TensorBlock> blocks;
  blocks.reserve(manifest.size());
  std::size_t offset = 0;
  for (const auto& e : manifest) {
    if (e.name.empty() || !names.insert(e.name).second) {
      throw CodecError("duplicate or empty block name '" + e.name + "'");
    }
    for (std::size_t d : e.shape) {
      if (d == 0) throw CodecError("block '" + e.name + "' has a zero dimension");
    }
    TensorBlock b{e.name, e.shape, e.dtype, {}};
    const std::size_t n = element_count(e.shape);
    b.values.resize(n);
    if (e.dtype == DType::f64) {
      for (std::size_t i = 0; i < n; ++i, offset += 8) {
        b.values[i] = std::bit_cast<double>(read_at<std::uint64_t>(bytes, offset));
      }
    } else {
      for (std::size_t i = 0; i < n; ++i, offset += 4) {
        b.values[i] = widen(read_at<std::uint32_t>(bytes, offset));
      }
    }
    blocks.push_back(std::move(b));
  }
  try {
    return ModelWeights(std::move(blocks));
  } catch (const std::invalid_argument& e) {
    throw CodecError(e.what());
  }
}

util::Json to_json(const WeightManifest& manifest) {
  util::Json out = util::Json::array();
  for (const auto& e : manifest) {
    out.push_back({{"name", e.name}, {"shape", e.shape}, {"dtype", model::dtype_name(e.dtype)}});
  }
  return out;
}

WeightManifest manifest_from_json(const util::Json& doc) {
  if (!doc.is_array()) throw CodecError("manifest must be an array");
  WeightManifest out;
  try {
    for (const auto& item : doc) {
      ManifestEntry e;
      e.name = item.at("name").get<std::string>();
      e.shape = item.at("shape").get<std::vector<std::size_t>>();
      e.dtype = model::dtype_from_name(item.at("dtype").get<std::string>());
      out.push_back(std::move(e));
    }
  } catch (const util::Json::exception& e) {
    throw CodecError(std::string("bad manifest: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw CodecError(std::string("bad manifest: ") + e.what());
  }
  return out;
}

util::Json weights_to_json(const ModelWeights& w) {
  const EncodedWeights enc = encode_weights(w);
  return {{"manifest", to_json(enc.manifest)}, {"data", util::base64_encode(enc.bytes)}};
}

ModelWeights weights_from_json(const util::Json& doc) {
  if (!doc.is_object() || !doc.contains("manifest") || !doc.contains("data") ||
      !doc.at("data").is_string()) {
    throw CodecError("weights document needs 'manifest' and 'data'");
  }
  std::vector<std::uint8_t> bytes;
  try {
    bytes = util::base64_decode(doc.at("data").get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw CodecError(e.what());
  }
  return decode_weights(manifest_from_json(doc.at("manifest")), bytes);
}

std::vector<std::uint8_t> weights_to_file_bytes(const ModelWeights& w) {
  const EncodedWeights enc = encode_weights(w);
  const std::string manifest = to_json(enc.manifest).dump();
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  append(out, kFileVersion);
  append(out, static_cast<std::uint64_t>(manifest.size()));
  out.insert(out.end(), manifest.begin(), manifest.end());
  out.insert(out.end(), enc.bytes.begin(), enc.bytes.end());
  return out;
}

ModelWeights weights_from_file_bytes(const std::vector<std::uint8_t>& data) {
  constexpr std::size_t header = 4 + 4 + 8;
  if (data.size() < header || std::memcmp(data.data(), kMagic, 4) != 0) {
    throw CodecError("not a weight file");
  }
  const auto version = read_at<std::uint32_t>(data, 4);
  if (version != kFileVersion) {
    throw CodecError("unsupported weight file version " + std::to_string(version));
  }
  const auto manifest_len = read_at<std::uint64_t>(data, 8);
  if (manifest_len > data.size() - header) throw CodecError("truncated weight file");
  const std::string manifest_text(data.begin() + header, data.begin() + header + manifest_len);
  util::Json manifest;
  try {
    manifest = util::Json::parse(manifest_text);
  } catch (const util::Json::exception& e) {
    throw CodecError(std::string("bad manifest: ") + e.what());
  }
  const std::vector<std::uint8_t> payload(data.begin() + header + manifest_len, data.end());
  return decode_weights(manifest_from_json(manifest), payload);
}

void write_file_atomic(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp-" + util::make_uuid_v4();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw fs::filesystem_error("cannot open for writing", tmp,
                                 std::make_error_code(std::errc::permission_denied));
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      fs::remove(tmp, ignored);
      throw fs::filesystem_error("write failed", tmp, std::make_error_code(std::errc::io_error));
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw fs::filesystem_error("rename failed", tmp, path, ec);
  }
}

void write_weight_file(const fs::path& path, const ModelWeights& w) {
  const auto bytes = weights_to_file_bytes(w);
  write_file_atomic(path, std::string(bytes.begin(), bytes.end()));
}

ModelWeights read_weight_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw fs::filesystem_error("cannot open weight file", path,
                               std::make_error_code(std::errc::no_such_file_or_directory));
  }
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return weights_from_file_bytes(data);
}

}  // namespace fedplat::proto
