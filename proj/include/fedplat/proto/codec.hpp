#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedplat/model/tensor.hpp"
#include "fedplat/util/json_reader.hpp"

namespace fedplat::proto {

using model::ModelWeights;

class CodecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ManifestEntry {
  std::string name;
  std::vector<std::size_t> shape;
  model::DType dtype = model::DType::f64;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

using WeightManifest = std::vector<ManifestEntry>;

struct EncodedWeights {
  WeightManifest manifest;
  std::vector<std::uint8_t> bytes;  // little-endian values in manifest order
};

EncodedWeights encode_weights(const ModelWeights& w);
// Throws CodecError on a length mismatch, a bad shape or duplicate names.
ModelWeights decode_weights(const WeightManifest& manifest, const std::vector<std::uint8_t>& bytes);

std::size_t payload_size(const WeightManifest& manifest);

util::Json to_json(const WeightManifest& manifest);
WeightManifest manifest_from_json(const util::Json& doc);

// {"manifest": [...], "data": "<base64>"}
util::Json weights_to_json(const ModelWeights& w);
ModelWeights weights_from_json(const util::Json& doc);

// File layout: "FPWT", u32 version, u64 manifest length, manifest JSON, payload.
std::vector<std::uint8_t> weights_to_file_bytes(const ModelWeights& w);
ModelWeights weights_from_file_bytes(const std::vector<std::uint8_t>& data);

// Writes through a temporary file and renames it into place, so readers never
// see a partial file. Throws std::filesystem::filesystem_error or CodecError.
void write_weight_file(const std::filesystem::path& path, const ModelWeights& w);
ModelWeights read_weight_file(const std::filesystem::path& path);

// Same temp-and-rename discipline for arbitrary bytes.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

}  // namespace fedplat::proto
