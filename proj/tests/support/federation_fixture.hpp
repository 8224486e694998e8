#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "fedplat/bench/federation.hpp"
#include "fedplat/cn/data_loader.hpp"
#include "fedplat/util/uuid.hpp"

namespace fixtures {

namespace fs = std::filesystem;

// Removed on destruction.
struct TempDir {
  fs::path path = fs::temp_directory_path() / ("fedplat-test-" + fedplat::util::make_uuid_v4());
  TempDir() { fs::create_directories(path); }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

inline std::shared_ptr<fedplat::cn::DataLoader> synthetic_loader(std::uint64_t seed, std::size_t n = 120,
                                                                 std::size_t features = 4) {
  auto d = fedplat::model::synth_dataset(seed, n, 0.2, features, {2.0});
  return std::make_shared<fedplat::cn::StaticDataLoader>(d, d);
}

class FailingLoader : public fedplat::cn::DataLoader {
 public:
  bool has_train() const override { return true; }
  const fedplat::model::Dataset& train_data() override {
    throw fedplat::model::DataError("local store unreadable");
  }
  const fedplat::model::Dataset& eval_data() override {
    throw fedplat::model::DataError("local store unreadable");
  }
};

// Three participants cn-1..cn-3 and an observer. `loaders` overrides the
// default synthetic data per participant; a null entry leaves that id
// registered but without a running node.
inline fedplat::bench::FederationOptions federation_options(
    const fs::path& root, std::vector<std::shared_ptr<fedplat::cn::DataLoader>> loaders = {}) {
  fedplat::bench::FederationOptions o;
  o.artifact_root = root;
  o.heartbeat = std::chrono::milliseconds(500);
  o.grace_s = 0.5;
  if (loaders.empty()) loaders = {synthetic_loader(1), synthetic_loader(2), synthetic_loader(3)};
  for (std::size_t i = 0; i < loaders.size(); ++i) {
    o.participants.push_back({"cn-" + std::to_string(i + 1), loaders[i], true});
  }
  o.observer = fedplat::bench::ParticipantSpec{"observer", synthetic_loader(9), true};
  return o;
}

}  // namespace fixtures
