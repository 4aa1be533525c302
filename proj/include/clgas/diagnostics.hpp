#pragma once

#include <span>
#include <string>
#include <vector>

#include "clgas/integrators.hpp"
#include "clgas/lyapunov.hpp"
#include "clgas/system.hpp"

namespace clgas {

struct ObservableSeries {
  std::string name;
  std::vector<double> times;
  std::vector<double> values;

  /// Throws InvalidConfig unless lengths match and times strictly increase.
  void validate() const;
};

struct MeanSE {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

/// Mean with a non-overlapping batch-means standard error. Fewer samples than
/// batches fall back to one sample per batch.
MeanSE batch_means(std::span<const double> values, std::size_t n_batches = 20);

/// Mean of |p|^2/(N d) with batch-means SE; the Gibbs target is 1/β.
/// The record variant uses the kinetic series from index `burn_in` onward.
MeanSE equipartition_stat(const TrajectoryRecord& record, std::size_t burn_in = 0);
MeanSE equipartition_stat(std::span<const ParticleState> samples);

/// Weighted least-squares fit of m(dt) = m0 + k dt^order; returns m0 and its SE.
MeanSE extrapolate_dt(std::span<const double> dts, std::span<const MeanSE> estimates, double order = 2.0);

enum class RadialReference { UniformDisk };

/// Kolmogorov distance between the radial CDF of the points (row-major, d
/// coordinates each) rescaled by their empirical 95th-percentile radius and
/// the uniform-disk law of the same rescaling, 0.95 r^2, on [0, 1].
double radial_law_distance(std::span<const double> points, std::size_t d,
                           RadialReference reference = RadialReference::UniformDisk);

struct RadialProfile {
  double r95 = 0.0;                // rescaling radius
  std::vector<double> r;           // grid on [0, 1], bins + 1 points
  std::vector<double> empirical;   // fraction of points with |x|/r95 <= r
  std::vector<double> reference;   // 0.95 r^2
};

/// The two CDFs behind radial_law_distance on a uniform grid, for plotting.
RadialProfile radial_profile(std::span<const double> points, std::size_t d, std::size_t bins);

struct RateFit {
  double rate = 0.0;       // λ̂ in value - floor ≈ A e^{-λ̂ t}
  double log_amplitude = 0.0;
  double r_squared = 0.0;
  double rate_se = 0.0;
  std::size_t first_index = 0;  // start of the suffix that was fitted
  std::size_t n_points = 0;
};

/// Least squares of log(value - floor) against t over the longest suffix
/// where value > floor. Throws DegenerateSeries when that suffix has fewer
/// than 3 points or the slope is not negative at three standard errors.
RateFit fit_exponential_rate(const ObservableSeries& series, double floor);

/// Σ_bins |P_A - P_B| (1 + exp(median log W in bin)) over a shared
/// bins^3 grid of (H, log W, min distance); summed in log space.
/// A monotone diagnostic only, not an estimate of the weighted TV distance.
double weighted_tv_proxy(std::span<const ParticleState> a, std::span<const ParticleState> b, const LyapunovParams& lp,
                         const SystemParams& params, std::size_t bins);

}  // namespace clgas
