#include "trflab/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

namespace trflab {

void write_file_atomic(const std::string& path, std::span<const std::uint8_t> bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + tmp + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    f.flush();
    if (!f) throw IoError("write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp + " to " + path + ": " + ec.message());
}

void write_file_atomic(const std::string& path, const std::string& text) {
  write_file_atomic(path, std::span<const std::uint8_t>(
                              reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trajectory_csv(const Sequence& x) {
  std::string out = "frame";
  for (std::size_t k = 0; k < x.dim(); ++k) out += ",dim" + std::to_string(k);
  out += '\n';
  for (std::size_t n = 0; n < x.n_frames(); ++n) {
    out += std::to_string(n);
    for (double v : x.frame(n)) out += "," + format_double(v);
    out += '\n';
  }
  return out;
}

void export_trajectory_csv(const Sequence& x, const std::string& path) {
  write_file_atomic(path, trajectory_csv(x));
}

Sequence parse_trajectory_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("frame", 0) != 0) {
    throw IoError("trajectory csv: missing header");
  }
  const auto dim = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
  std::vector<double> values;
  std::size_t n_frames = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    if (cell != std::to_string(n_frames)) throw IoError("trajectory csv: bad frame index " + cell);
    std::size_t k = 0;
    while (std::getline(row, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw IoError("trajectory csv: bad number '" + cell + "'");
      }
      ++k;
    }
    if (k != dim) throw IoError("trajectory csv: row " + std::to_string(n_frames) + " has wrong width");
    ++n_frames;
  }
  return Sequence(n_frames, dim, std::move(values));
}

Sequence import_trajectory_csv(const std::string& path) {
  const auto bytes = read_file(path);
  return parse_trajectory_csv(std::string(bytes.begin(), bytes.end()));
}

std::vector<std::uint8_t> frame_pgm(std::span<const double> frame, std::size_t grid) {
  if (frame.size() != grid * grid) throw std::invalid_argument("frame_pgm: frame is not grid x grid");
  const std::string header = "P5\n" + std::to_string(grid) + " " + std::to_string(grid) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  for (double v : frame) {
    const double c = std::clamp(v, 0.0, 1.0);
    out.push_back(static_cast<std::uint8_t>(std::lround(c * 255.0)));
  }
  return out;
}

std::vector<std::string> export_frames_pgm(const Sequence& frames, std::size_t grid,
                                           const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  std::vector<std::string> paths;
  for (std::size_t n = 0; n < frames.n_frames(); ++n) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%03zu.pgm", n);
    const std::string path = (std::filesystem::path(dir) / name).string();
    write_file_atomic(path, frame_pgm(frames.frame(n), grid));
    paths.push_back(path);
  }
  return paths;
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[pos + i]) << (8 * i);
  return v;
}

}  // namespace

std::vector<std::uint8_t> tensor_bytes(const Sequence& x) {
  std::vector<std::uint8_t> out = {'T', 'R', 'F', 'T'};
  put_u32(out, kTensorVersion);
  put_u32(out, static_cast<std::uint32_t>(x.n_frames()));
  put_u32(out, static_cast<std::uint32_t>(x.dim()));
  for (double v : x.flat()) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  return out;
}

Sequence parse_tensor(std::span<const std::uint8_t> b) {
  if (b.size() < 16 || std::memcmp(b.data(), "TRFT", 4) != 0) throw IoError("tensor: bad magic");
  if (get_u32(b, 4) != kTensorVersion) throw IoError("tensor: unsupported version");
  const std::size_t n = get_u32(b, 8);
  const std::size_t d = get_u32(b, 12);
  if (b.size() != 16 + 8 * n * d) throw IoError("tensor: size does not match header");
  std::vector<double> values(n * d);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(b[16 + 8 * i + k]) << (8 * k);
    values[i] = std::bit_cast<double>(bits);
  }
  return Sequence(n, d, std::move(values));
}

void export_tensor(const Sequence& x, const std::string& path) {
  write_file_atomic(path, tensor_bytes(x));
}

Sequence import_tensor(const std::string& path) {
  try {
    return parse_tensor(read_file(path));
  } catch (const IoError& e) {
    throw IoError(path + ": " + e.what());
  }
}

void export_loss_curve_csv(std::span<const double> losses, const std::string& path) {
  std::string out = "step,loss\n";
  for (std::size_t i = 0; i < losses.size(); ++i) {
    out += std::to_string(i) + "," + format_double(losses[i]) + "\n";
  }
  write_file_atomic(path, out);
}

}  // namespace trflab
