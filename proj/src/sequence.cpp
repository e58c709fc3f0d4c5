#include "trflab/sequence.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace trflab {

Sequence::Sequence(std::size_t n_frames, std::size_t dim)
    : n_frames_(n_frames), dim_(dim), data_(n_frames * dim, 0.0) {}

Sequence::Sequence(std::size_t n_frames, std::size_t dim, std::vector<double> values)
    : n_frames_(n_frames), dim_(dim), data_(std::move(values)) {
  if (data_.size() != n_frames * dim) {
    throw std::invalid_argument("Sequence: " + std::to_string(data_.size()) +
                                " values cannot fill " + std::to_string(n_frames) + "x" +
                                std::to_string(dim));
  }
}

Sequence Sequence::from_frames(std::span<const Frame> frames) {
  if (frames.empty()) return {};
  const std::size_t d = frames.front().dim();
  Sequence out(frames.size(), d);
  for (std::size_t n = 0; n < frames.size(); ++n) {
    if (frames[n].dim() != d) throw std::invalid_argument("Sequence: ragged frames");
    out.set_frame(n, frames[n].values());
  }
  return out;
}

Frame Sequence::frame_copy(std::size_t n) const {
  auto f = frame(n);
  return Frame(std::vector<double>(f.begin(), f.end()));
}

void Sequence::set_frame(std::size_t n, std::span<const double> values) {
  if (values.size() != dim_) throw std::invalid_argument("Sequence::set_frame: dimension mismatch");
  std::copy(values.begin(), values.end(), data_.begin() + static_cast<std::ptrdiff_t>(n * dim_));
}

bool Sequence::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Sequence& Sequence::operator+=(const Sequence& other) {
  require_same_shape(*this, other, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Sequence& Sequence::operator-=(const Sequence& other) {
  require_same_shape(*this, other, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Sequence& Sequence::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Sequence operator+(Sequence a, const Sequence& b) { return a += b; }
Sequence operator-(Sequence a, const Sequence& b) { return a -= b; }
Sequence operator*(double s, Sequence a) { return a *= s; }

Sequence reverse(const Sequence& x) {
  Sequence out(x.n_frames(), x.dim());
  const std::size_t n = x.n_frames();
  for (std::size_t m = 0; m < n; ++m) out.set_frame(m, x.frame(n - 1 - m));
  return out;
}

void require_same_shape(const Sequence& a, const Sequence& b, const char* what) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch (" +
                                std::to_string(a.n_frames()) + "x" + std::to_string(a.dim()) +
                                " vs " + std::to_string(b.n_frames()) + "x" +
                                std::to_string(b.dim()) + ")");
  }
}

double squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

double distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("distance: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double e = a[i] - b[i];
    s += e * e;
  }
  return std::sqrt(s);
}

}  // namespace trflab
