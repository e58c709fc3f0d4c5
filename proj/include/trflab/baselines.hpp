#pragma once

#include "trflab/denoiser.hpp"
#include "trflab/rng.hpp"
#include "trflab/sampler.hpp"
#include "trflab/schedule.hpp"

namespace trflab {

/// Per-frame conditions (1 - n/(N-1)) c_s + n/(N-1) c_e.
std::vector<Frame> interpolated_conditions(const Frame& c_s, const Frame& c_e,
                                           std::size_t n_frames);

/// One forward path whose condition at frame n interpolates c_s -> c_e.
/// With `swap_end_with_noise` the end condition is replaced by a unit-normal
/// frame drawn from the condition-swap stream.
SampleResult baseline_condition_interp(const Denoiser& backend, const NoiseSchedule& schedule,
                                       const Condition& c_s, const Condition& c_e,
                                       const ChurnParams& churn, std::size_t n_frames,
                                       std::size_t dim, NoiseStreams& noise,
                                       bool swap_end_with_noise = false);

/// Forward path on c_s; after every step frame N-1 is overwritten with
/// end_frame + sigma_next eps, so it lands on end_frame exactly.
SampleResult baseline_inpaint(const Denoiser& backend, const NoiseSchedule& schedule,
                              const Condition& c_s, const Frame& end_frame,
                              const ChurnParams& churn, std::size_t n_frames, std::size_t dim,
                              NoiseStreams& noise);

}  // namespace trflab
