#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "dqkd/channel.hpp"
#include "dqkd/keyrate.hpp"

namespace dqkd {

/// Alice's launched (s2, s3) and Bob's measured (s2, s3) for one pulse.
struct SamplePair {
    QuadraturePair sent;
    QuadraturePair measured;
};

inline constexpr std::size_t kMinCompensationPairs = 100;
inline constexpr std::size_t kMinEstimationPairs = 1000;

/// Thrown when the revealed data cannot support a positive key.
class EstimationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Least-squares rotation taking `sent` onto `measured`:
///   theta = atan2(sum(x_s p_m - p_s x_m), sum(x_s x_m + p_s p_m)).
/// All-zero input yields 0. Needs at least 100 pairs.
double compensate_polarization(std::span<const SamplePair> pairs);

/// Counter-rotates every measured value by -theta.
void apply_compensation(std::span<SamplePair> pairs, double theta);

/// Channel estimate from revealed pairs. The receiver calibration supplies
/// the shot-noise and electronic-noise floor subtracted from the residual.
/// Throws EstimationError for a nonpositive transmission estimate.
CovarianceEstimate estimate_parameters(std::span<const SamplePair> pairs, const SessionConfig& cfg,
                                       const ReceiverConfig& rcv, double z = kConfidenceZ);

/// Re-derives the bounds as if `scale` times as many pairs had been revealed
/// with the same statistics.
CovarianceEstimate rescale_estimate(const CovarianceEstimate& est, double scale,
                                    double z = kConfidenceZ);

}  // namespace dqkd
