#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace trflab {

/// One d-dimensional frame of a sequence.
class Frame {
 public:
  Frame() = default;
  explicit Frame(std::size_t dim, double fill = 0.0) : values_(dim, fill) {}
  explicit Frame(std::vector<double> values) : values_(std::move(values)) {}
  Frame(std::initializer_list<double> values) : values_(values) {}

  std::size_t dim() const { return values_.size(); }
  double operator[](std::size_t k) const { return values_[k]; }
  double& operator[](std::size_t k) { return values_[k]; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  bool operator==(const Frame&) const = default;

 private:
  std::vector<double> values_;
};

/// N frames of dimension d, stored frame-major (frame n occupies
/// [n*d, (n+1)*d) of the flat buffer).
class Sequence {
 public:
  Sequence() = default;
  Sequence(std::size_t n_frames, std::size_t dim);
  Sequence(std::size_t n_frames, std::size_t dim, std::vector<double> values);
  static Sequence from_frames(std::span<const Frame> frames);

  std::size_t n_frames() const { return n_frames_; }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return data_.size(); }

  std::span<const double> frame(std::size_t n) const {
    return {data_.data() + n * dim_, dim_};
  }
  std::span<double> frame(std::size_t n) { return {data_.data() + n * dim_, dim_}; }
  Frame frame_copy(std::size_t n) const;
  void set_frame(std::size_t n, std::span<const double> values);

  double operator()(std::size_t n, std::size_t k) const { return data_[n * dim_ + k]; }
  double& operator()(std::size_t n, std::size_t k) { return data_[n * dim_ + k]; }

  std::span<const double> flat() const { return data_; }
  std::span<double> flat() { return data_; }

  bool same_shape(const Sequence& other) const {
    return n_frames_ == other.n_frames_ && dim_ == other.dim_;
  }
  bool all_finite() const;

  Sequence& operator+=(const Sequence& other);
  Sequence& operator-=(const Sequence& other);
  Sequence& operator*=(double s);

  bool operator==(const Sequence&) const = default;

 private:
  std::size_t n_frames_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

Sequence operator+(Sequence a, const Sequence& b);
Sequence operator-(Sequence a, const Sequence& b);
Sequence operator*(double s, Sequence a);

/// Frame-order reversal: output frame m is input frame N-1-m.
Sequence reverse(const Sequence& x);

/// Throws std::invalid_argument unless the shapes agree.
void require_same_shape(const Sequence& a, const Sequence& b, const char* what);

double squared_norm(std::span<const double> v);
double distance(std::span<const double> a, std::span<const double> b);

}  // namespace trflab
