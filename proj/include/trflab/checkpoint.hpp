#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "trflab/mlp.hpp"

namespace trflab {

/// Binary layout, all little-endian:
///   "TRFW" | u32 version | u32 n_frames | u32 frame_dim | u32 cond_dim |
///   u32 n_fourier | f64 sigma_data | u32 n_hidden | u32 width[n_hidden] |
///   per layer: u32 rows | u32 cols | f64 weight[rows*cols] (row-major) |
///              u32 len | f64 bias[len]
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CorruptCheckpoint : CheckpointError {
  using CheckpointError::CheckpointError;
};
struct CheckpointVersionMismatch : CheckpointError {
  std::uint32_t found;
  explicit CheckpointVersionMismatch(std::uint32_t v);
};
struct CheckpointShapeMismatch : CheckpointError {
  std::string layer;
  CheckpointShapeMismatch(std::string layer, const std::string& detail);
};

std::vector<std::uint8_t> serialize_checkpoint(const MlpParams& params);
/// With `expected`, every block must have the shape `expected` implies.
MlpParams deserialize_checkpoint(const std::vector<std::uint8_t>& bytes,
                                 const std::optional<MlpDescriptor>& expected = std::nullopt);

void save_checkpoint(const MlpParams& params, const std::string& path);
MlpParams load_checkpoint(const std::string& path,
                          const std::optional<MlpDescriptor>& expected = std::nullopt);

}  // namespace trflab
