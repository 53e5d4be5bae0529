#ifndef CLARITY_CHECKPOINT_HPP
#define CLARITY_CHECKPOINT_HPP

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "clarity/tensor.hpp"

namespace clarity {

// Versioned, checksummed container of named double arrays plus a JSON
// metadata block. Layout:
//   bytes 0..7   magic "CLRARR1\n"
//   bytes 8..15  little-endian u64 header length
//   header       JSON: {"meta": {...}, "arrays": [{name, shape, offset}]}
//   payload      concatenated raw little-endian doubles
//   trailer      little-endian u32 CRC-32 of everything before it
struct NamedArrays {
  nlohmann::json meta;
  std::vector<std::pair<std::string, Tensor>> arrays;

  const Tensor& find(const std::string& name) const;
  bool has(const std::string& name) const;
};

void save_array_container(const NamedArrays& data, const std::string& path);
NamedArrays load_array_container(const std::string& path);

// A checkpoint is an array container whose meta block carries the training
// state: format version, stage tag ("teacher" | "kt" | "da"), degradation
// kind (teacher stages), epoch/iteration counters, config hash, serialized
// RNG state, backbone (and discriminator) configuration, optimizer step
// counters and the tail of the metric log.
struct CheckpointData {
  NamedArrays container;

  std::string stage() const;
  std::string kind() const;
  int epoch() const;
  int64_t iteration() const;
  uint64_t config_hash() const;
};

void save_checkpoint(const CheckpointData& ck, const std::string& path);
CheckpointData load_checkpoint(const std::string& path);

inline constexpr int kCheckpointFormatVersion = 1;

}  // namespace clarity

#endif
