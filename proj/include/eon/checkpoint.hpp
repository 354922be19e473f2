#pragma once

#include <string>

#include <json.hpp>

#include "eon/network.hpp"

namespace eon {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Checkpoint directory layout:
//   manifest.json  metadata + parameter index {name -> shape, offset, dtype}
//   params.bin     raw little-endian values, entries at their stated offsets
//
// dtype is "f32" (default interchange format) or "f64" (exact, used when a
// resumed run must reproduce the next step bitwise).
void save_checkpoint(const std::string& dir, const ParamStore& store,
                     const nlohmann::json& meta, const std::string& dtype);

struct LoadedCheckpoint {
  ParamStore params;
  nlohmann::json meta;
};

LoadedCheckpoint load_checkpoint(const std::string& dir);

}  // namespace eon
