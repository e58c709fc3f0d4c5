#include "trflab/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

namespace trflab {
namespace {

constexpr char kMagic[4] = {'T', 'R', 'F', 'W'};

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  std::vector<std::uint8_t> out;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : bytes(b) {}
  void need(std::size_t n, const char* what) {
    if (bytes.size() - pos < n) {
      throw CorruptCheckpoint(std::string("checkpoint truncated while reading ") + what);
    }
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos++]) << (8 * i);
    return v;
  }
  double f64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[pos++]) << (8 * i);
    return std::bit_cast<double>(v);
  }
  const std::vector<std::uint8_t>& bytes;
  std::size_t pos = 0;
};

std::string layer_name(std::size_t l, const char* part) {
  return "layer" + std::to_string(l) + "." + part;
}

}  // namespace

CheckpointVersionMismatch::CheckpointVersionMismatch(std::uint32_t v)
    : CheckpointError("checkpoint version " + std::to_string(v) + " is not supported (expected " +
                      std::to_string(kCheckpointVersion) + ")"),
      found(v) {}

CheckpointShapeMismatch::CheckpointShapeMismatch(std::string l, const std::string& detail)
    : CheckpointError("checkpoint shape mismatch in " + l + ": " + detail), layer(std::move(l)) {}

std::vector<std::uint8_t> serialize_checkpoint(const MlpParams& params) {
  const auto& d = params.descriptor();
  Writer w;
  for (char c : kMagic) w.out.push_back(static_cast<std::uint8_t>(c));
  w.u32(kCheckpointVersion);
  w.u32(d.n_frames);
  w.u32(d.frame_dim);
  w.u32(d.cond_dim);
  w.u32(d.n_fourier);
  w.f64(d.sigma_data);
  w.u32(static_cast<std::uint32_t>(d.hidden.size()));
  for (auto h : d.hidden) w.u32(h);
  for (std::size_t l = 0; l < d.n_layers(); ++l) {
    const auto weight = params.weight(l);
    w.u32(static_cast<std::uint32_t>(weight.rows()));
    w.u32(static_cast<std::uint32_t>(weight.cols()));
    for (Eigen::Index i = 0; i < weight.size(); ++i) w.f64(weight.data()[i]);
    const auto bias = params.bias(l);
    w.u32(static_cast<std::uint32_t>(bias.size()));
    for (Eigen::Index i = 0; i < bias.size(); ++i) w.f64(bias(i));
  }
  return std::move(w.out);
}

MlpParams deserialize_checkpoint(const std::vector<std::uint8_t>& bytes,
                                 const std::optional<MlpDescriptor>& expected) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw CorruptCheckpoint("not a checkpoint file (bad magic)");
  }
  Reader r(bytes);
  r.pos = 4;
  const std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion) throw CheckpointVersionMismatch(version);

  MlpDescriptor d;
  d.n_frames = r.u32("descriptor");
  d.frame_dim = r.u32("descriptor");
  d.cond_dim = r.u32("descriptor");
  d.n_fourier = r.u32("descriptor");
  d.sigma_data = r.f64("descriptor");
  const std::uint32_t n_hidden = r.u32("descriptor");
  if (n_hidden > 1024) throw CorruptCheckpoint("implausible hidden layer count");
  d.hidden.resize(n_hidden);
  for (auto& h : d.hidden) h = r.u32("descriptor");

  const MlpDescriptor& target = expected ? *expected : d;
  MlpParams params;
  try {
    params = MlpParams(target);
  } catch (const std::invalid_argument& e) {
    throw CorruptCheckpoint(std::string("invalid descriptor: ") + e.what());
  }
  if (d.n_layers() != target.n_layers()) {
    throw CheckpointShapeMismatch("descriptor", "file has " + std::to_string(d.n_layers()) +
                                                    " layers, expected " +
                                                    std::to_string(target.n_layers()));
  }
  for (std::size_t l = 0; l < target.n_layers(); ++l) {
    auto weight = params.weight(l);
    const std::uint32_t rows = r.u32("weight shape");
    const std::uint32_t cols = r.u32("weight shape");
    if (rows != weight.rows() || cols != weight.cols()) {
      throw CheckpointShapeMismatch(
          layer_name(l, "weight"),
          "file has " + std::to_string(rows) + "x" + std::to_string(cols) + ", expected " +
              std::to_string(weight.rows()) + "x" + std::to_string(weight.cols()));
    }
    for (Eigen::Index i = 0; i < weight.size(); ++i) weight.data()[i] = r.f64("weights");
    auto bias = params.bias(l);
    const std::uint32_t len = r.u32("bias shape");
    if (len != bias.size()) {
      throw CheckpointShapeMismatch(layer_name(l, "bias"),
                                    "file has " + std::to_string(len) + ", expected " +
                                        std::to_string(bias.size()));
    }
    for (Eigen::Index i = 0; i < bias.size(); ++i) bias(i) = r.f64("bias");
  }
  if (expected && !(d == *expected)) {
    throw CheckpointShapeMismatch("descriptor", "file descriptor differs from the expected one");
  }
  if (r.pos != bytes.size()) throw CorruptCheckpoint("trailing bytes after the last layer");
  return params;
}

void save_checkpoint(const MlpParams& params, const std::string& path) {
  const auto bytes = serialize_checkpoint(params);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw CheckpointError("cannot open " + tmp + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw CheckpointError("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

MlpParams load_checkpoint(const std::string& path, const std::optional<MlpDescriptor>& expected) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open checkpoint " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes, expected);
}

}  // namespace trflab
