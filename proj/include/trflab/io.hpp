#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "trflab/sequence.hpp"

namespace trflab {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Writes to `path + ".tmp"` and renames into place.
void write_file_atomic(const std::string& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::string& path, const std::string& text);
std::vector<std::uint8_t> read_file(const std::string& path);

/// "%.17g", which round-trips every double.
std::string format_double(double v);

/// Header "frame,dim0,...,dim{d-1}", one row per frame.
std::string trajectory_csv(const Sequence& x);
void export_trajectory_csv(const Sequence& x, const std::string& path);
Sequence parse_trajectory_csv(const std::string& text);
Sequence import_trajectory_csv(const std::string& path);

/// Binary P5, 8-bit; values in [0, 1] map linearly to 0..255 (clamped).
std::vector<std::uint8_t> frame_pgm(std::span<const double> frame, std::size_t grid);
/// One file frame_XXX.pgm per frame of `frames` (each grid*grid values).
/// Returns the written paths.
std::vector<std::string> export_frames_pgm(const Sequence& frames, std::size_t grid,
                                           const std::string& dir);

/// "TRFT" | u32 version | u32 N | u32 d | N*d f64, all little-endian.
inline constexpr std::uint32_t kTensorVersion = 1;
std::vector<std::uint8_t> tensor_bytes(const Sequence& x);
Sequence parse_tensor(std::span<const std::uint8_t> bytes);
void export_tensor(const Sequence& x, const std::string& path);
Sequence import_tensor(const std::string& path);

/// "step,loss" rows.
void export_loss_curve_csv(std::span<const double> losses, const std::string& path);

}  // namespace trflab
