#pragma once

// Model checkpoints as JSON text.
//
// Top-level fields, in order:
//   format      "coriem-checkpoint"
//   version     1
//   config      run configuration without path-valued keys
//   shape       dim, feature_dim, ricci_width, layers, encoder, fusion
//   dataset     n_users, n_items
//   params      [{name, rows, cols, data}] in Network layout order
//   initial     embedding table before the first interval
//   final       embedding table after the last interval of the last epoch
//   curvature   per-interval records of the last epoch
// Tables hold kappa_u, kappa_i, users, items (row-major), user_time and
// item_time (null before the first interaction).

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "coriem/config.hpp"
#include "coriem/data.hpp"
#include "coriem/trainer.hpp"

namespace coriem::ckpt {

inline constexpr const char* kFormat = "coriem-checkpoint";
inline constexpr int kVersion = 1;

struct Checkpoint {
  RunConfig config;
  train::TrainResult model;
};

std::string serialize(const Checkpoint& c);
/// Throws DataError on malformed or incompatible input.
Checkpoint deserialize(const std::string& text);

void save(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint load(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::string_view bytes);
/// 16 lowercase hex digits of fnv1a64(serialize(c)).
std::string digest(const Checkpoint& c);

/// Throws DimensionMismatch when `requested` asks for a different model shape
/// and DataError when the dataset's entity counts differ from the checkpoint.
void check_compatible(const Checkpoint& c, const data::Dataset& ds, const RunConfig& requested);

}  // namespace coriem::ckpt
