#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace skeladapt {

/// Flat named-buffer snapshot of a training run. Serialization is
/// byte-deterministic: a save/load/save round trip produces identical files.
struct Checkpoint {
  uint64_t net_hash = 0;
  uint64_t disc_hash = 0;  // 0 when no discriminator is attached
  uint8_t norm_kind = 0;   // 0 = batch stats, 1 = per-domain stats
  int64_t iteration = 0;
  std::vector<std::pair<std::string, std::vector<float>>> net_params;
  std::vector<std::pair<std::string, std::vector<float>>> net_state;
  std::vector<std::pair<std::string, std::vector<float>>> disc_params;
  std::vector<double> net_opt;   // optimizer slots, empty when not saved
  std::vector<double> disc_opt;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace skeladapt
