#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "trflab/sequence.hpp"
#include "trflab/worlds.hpp"

namespace trflab {

/// |x^{N-1} - target|.
double endpoint_error(const Sequence& x, const Frame& target);

/// max_n |x^{n+1} - 2 x^n + x^{n-1}|. Requires N >= 3.
double roughness(const Sequence& x);

/// Energy distance 2 E|a-b| - E|a-a'| - E|b-b'| over flattened sequences.
/// Within-set terms exclude self-pairs; when both sets have the same size the
/// cross term excludes index-paired (a_i, b_i) as well, so identical inputs
/// give exactly 0. Both conventions are unbiased for independent samples.
double energy_distance(std::span<const Sequence> a, std::span<const Sequence> b);

struct ModeCoverage {
  std::vector<std::size_t> counts;
  std::size_t modes_hit = 0;

  double max_share() const;
};

/// Assigns every sample to its nearest template (flattened distance).
ModeCoverage mode_coverage(std::span<const Sequence> samples, const TrajectoryGmmWorld& world);

struct MetricValue {
  double value = 0.0;
  std::size_t count = 0;
};

/// Named scalar metrics; insertion rejects non-finite values.
class MetricReport {
 public:
  void set(const std::string& name, double value, std::size_t count);
  const std::map<std::string, MetricValue>& values() const { return values_; }
  const MetricValue& at(const std::string& name) const { return values_.at(name); }

 private:
  std::map<std::string, MetricValue> values_;
};

double median(std::vector<double> v);
double mean(std::span<const double> v);

}  // namespace trflab
