#include "clgas/diagnostics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "clgas/error.hpp"

namespace clgas {

void ObservableSeries::validate() const {
  if (times.size() != values.size()) throw Error(ErrorKind::InvalidConfig, "series '" + name + "' length mismatch");
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (!(times[k] > times[k - 1])) {
      throw Error(ErrorKind::InvalidConfig, "series '" + name + "' times are not strictly increasing");
    }
  }
}

MeanSE batch_means(std::span<const double> values, std::size_t n_batches) {
  MeanSE out;
  out.n = values.size();
  if (values.empty()) return out;
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  const std::size_t batches = std::min(std::max<std::size_t>(n_batches, 2), values.size());
  const std::size_t len = values.size() / batches;
  if (batches < 2 || len == 0) return out;
  std::vector<double> means(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    const auto first = values.begin() + static_cast<std::ptrdiff_t>(b * len);
    means[b] = std::accumulate(first, first + static_cast<std::ptrdiff_t>(len), 0.0) / static_cast<double>(len);
  }
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(batches);
  double ss = 0.0;
  for (double m : means) ss += (m - grand) * (m - grand);
  out.se = std::sqrt(ss / static_cast<double>(batches - 1) / static_cast<double>(batches));
  return out;
}

MeanSE equipartition_stat(const TrajectoryRecord& record, std::size_t burn_in) {
  if (record.states.empty()) throw Error(ErrorKind::EmptyEnsemble, "trajectory has no states");
  if (record.kinetic.size() < burn_in + 2) throw Error(ErrorKind::EmptyEnsemble, "equipartition needs >= 2 samples");
  const double dof = static_cast<double>(record.states.front().n * record.states.front().d);
  std::vector<double> v(record.kinetic.begin() + static_cast<std::ptrdiff_t>(burn_in), record.kinetic.end());
  for (auto& x : v) x = 2.0 * x / dof;
  return batch_means(v);
}

MeanSE equipartition_stat(std::span<const ParticleState> samples) {
  if (samples.size() < 2) throw Error(ErrorKind::EmptyEnsemble, "equipartition needs >= 2 samples");
  std::vector<double> v;
  v.reserve(samples.size());
  for (const auto& s : samples) v.push_back(squared_norm_p(s) / static_cast<double>(s.n * s.d));
  return batch_means(v);
}

MeanSE extrapolate_dt(std::span<const double> dts, std::span<const MeanSE> estimates, double order) {
  if (dts.size() != estimates.size() || dts.size() < 2) {
    throw Error(ErrorKind::InvalidConfig, "extrapolation needs >= 2 matching (dt, estimate) pairs");
  }
  // Normal equations of weighted least squares for y = a + b x.
  double s0 = 0, s1 = 0, s2 = 0, t0 = 0, t1 = 0;
  for (std::size_t k = 0; k < dts.size(); ++k) {
    const double x = std::pow(dts[k], order);
    const double se = estimates[k].se;
    const double w = se > 0.0 ? 1.0 / (se * se) : 1.0;
    s0 += w;
    s1 += w * x;
    s2 += w * x * x;
    t0 += w * estimates[k].mean;
    t1 += w * x * estimates[k].mean;
  }
  const double det = s0 * s2 - s1 * s1;
  if (!(det > 0.0)) throw Error(ErrorKind::InvalidConfig, "extrapolation needs distinct dt values");
  MeanSE out;
  out.mean = (s2 * t0 - s1 * t1) / det;
  const bool weighted = std::all_of(estimates.begin(), estimates.end(), [](const MeanSE& e) { return e.se > 0.0; });
  out.se = weighted ? std::sqrt(s2 / det) : 0.0;
  out.n = dts.size();
  return out;
}

namespace {

std::vector<double> sorted_radii(std::span<const double> points, std::size_t d) {
  if (d != 2) throw Error(ErrorKind::DimensionMismatch, "the uniform-disk reference needs d = 2");
  if (points.size() % d != 0) throw Error(ErrorKind::DimensionMismatch, "point buffer is not a multiple of d");
  const std::size_t n = points.size() / d;
  if (n < 100) throw Error(ErrorKind::InvalidConfig, "radial law needs >= 100 points");
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = std::hypot(points[2 * i], points[2 * i + 1]);
  std::sort(r.begin(), r.end());
  return r;
}

double percentile95(const std::vector<double>& sorted) {
  return sorted[static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(sorted.size()))) - 1];
}

}  // namespace

RadialProfile radial_profile(std::span<const double> points, std::size_t d, std::size_t bins) {
  if (bins == 0) throw Error(ErrorKind::InvalidConfig, "bins must be >= 1");
  const auto r = sorted_radii(points, d);
  RadialProfile out;
  out.r95 = percentile95(r);
  for (std::size_t b = 0; b <= bins; ++b) {
    const double x = static_cast<double>(b) / static_cast<double>(bins);
    const auto count = std::upper_bound(r.begin(), r.end(), x * out.r95) - r.begin();
    out.r.push_back(x);
    out.empirical.push_back(static_cast<double>(count) / static_cast<double>(r.size()));
    out.reference.push_back(0.95 * x * x);
  }
  return out;
}

double radial_law_distance(std::span<const double> points, std::size_t d, RadialReference reference) {
  (void)reference;
  const auto r = sorted_radii(points, d);
  const std::size_t n = r.size();
  const double r95 = percentile95(r);
  if (!(r95 > 0.0)) return 1.0;
  const double nn = static_cast<double>(n);
  double dist = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = r[i] / r95;
    if (x > 1.0) break;
    const double ref = 0.95 * x * x;
    dist = std::max({dist, std::abs(static_cast<double>(i) / nn - ref), std::abs(static_cast<double>(i + 1) / nn - ref)});
  }
  return std::min(dist, 1.0);
}

RateFit fit_exponential_rate(const ObservableSeries& series, double floor) {
  series.validate();
  std::size_t first = series.values.size();
  while (first > 0 && series.values[first - 1] - floor > 0.0) --first;
  const std::size_t m = series.values.size() - first;
  if (m < 3) throw Error(ErrorKind::DegenerateSeries, "series '" + series.name + "' has no positive suffix of length >= 3");

  double mt = 0, my = 0;
  std::vector<double> y(m);
  for (std::size_t k = 0; k < m; ++k) {
    y[k] = std::log(series.values[first + k] - floor);
    mt += series.times[first + k];
    my += y[k];
  }
  mt /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double stt = 0, sty = 0, syy = 0;
  for (std::size_t k = 0; k < m; ++k) {
    const double dt = series.times[first + k] - mt, dy = y[k] - my;
    stt += dt * dt;
    sty += dt * dy;
    syy += dy * dy;
  }
  const double slope = sty / stt;
  double sse = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double e = y[k] - (my + slope * (series.times[first + k] - mt));
    sse += e * e;
  }
  RateFit fit;
  fit.rate = -slope;
  fit.log_amplitude = my - slope * mt;
  fit.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  fit.rate_se = m > 2 ? std::sqrt(sse / static_cast<double>(m - 2) / stt) : 0.0;
  fit.first_index = first;
  fit.n_points = m;
  if (!(fit.rate > 3.0 * fit.rate_se) || !(fit.rate > 0.0)) {
    throw Error(ErrorKind::DegenerateSeries,
                "series '" + series.name + "' shows no significant exponential decay above the floor");
  }
  return fit;
}

double weighted_tv_proxy(std::span<const ParticleState> a, std::span<const ParticleState> b, const LyapunovParams& lp,
                         const SystemParams& params, std::size_t bins) {
  if (a.empty() || b.empty()) throw Error(ErrorKind::EmptyEnsemble, "weighted_tv_proxy needs two nonempty ensembles");
  if (bins == 0) throw Error(ErrorKind::InvalidConfig, "bins must be >= 1");

  using Feature = std::array<double, 3>;
  auto features = [&](std::span<const ParticleState> ens) {
    std::vector<Feature> out;
    out.reserve(ens.size());
    for (const auto& s : ens) {
      const double md = min_pair_distance(s);
      out.push_back({total_energy(params, s), log_W(params, lp, s), std::isfinite(md) ? md : 0.0});
    }
    return out;
  };
  const auto fa = features(a), fb = features(b);

  Feature lo, hi;
  lo.fill(std::numeric_limits<double>::infinity());
  hi.fill(-std::numeric_limits<double>::infinity());
  for (const auto* set : {&fa, &fb}) {
    for (const auto& f : *set) {
      for (int k = 0; k < 3; ++k) {
        lo[k] = std::min(lo[k], f[k]);
        hi[k] = std::max(hi[k], f[k]);
      }
    }
  }
  auto bin_of = [&](const Feature& f) {
    std::size_t idx = 0;
    for (int k = 0; k < 3; ++k) {
      std::size_t c = 0;
      if (hi[k] > lo[k]) {
        c = static_cast<std::size_t>((f[k] - lo[k]) / (hi[k] - lo[k]) * static_cast<double>(bins));
        c = std::min(c, bins - 1);
      }
      idx = idx * bins + c;
    }
    return idx;
  };

  struct Cell {
    double pa = 0.0, pb = 0.0;
    std::vector<double> logw;
  };
  std::map<std::size_t, Cell> cells;
  for (const auto& f : fa) {
    auto& c = cells[bin_of(f)];
    c.pa += 1.0 / static_cast<double>(fa.size());
    c.logw.push_back(f[1]);
  }
  for (const auto& f : fb) {
    auto& c = cells[bin_of(f)];
    c.pb += 1.0 / static_cast<double>(fb.size());
    c.logw.push_back(f[1]);
  }

  std::vector<double> terms;
  for (auto& [idx, c] : cells) {
    const double diff = std::abs(c.pa - c.pb);
    if (diff <= 1e-15) continue;
    std::sort(c.logw.begin(), c.logw.end());
    const std::size_t k = c.logw.size();
    const double med = k % 2 ? c.logw[k / 2] : 0.5 * (c.logw[k / 2 - 1] + c.logw[k / 2]);
    // log(1 + e^med) without overflow
    const double log_weight = med > 0.0 ? med + std::log1p(std::exp(-med)) : std::log1p(std::exp(med));
    terms.push_back(std::log(diff) + log_weight);
  }
  if (terms.empty()) return 0.0;
  const double top = *std::max_element(terms.begin(), terms.end());
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - top);
  return std::exp(top + std::log(sum));
}

}  // namespace clgas
