#pragma once

// Reference implementations used only by the tests. Each one is written
// from the model definitions directly, shares no code with ste_core, and
// favors transparency over speed.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

namespace oracle {

struct Source {
  double xs, ys, q, u, phi, d, tau;
};

inline double plume(double x, double y, const Source& s) {
  return s.q / (4.0 * std::numbers::pi * s.d * std::hypot(x - s.xs, y - s.ys)) *
         std::exp(-std::hypot(x - s.xs, y - s.ys) /
                      std::sqrt(s.d * s.tau / (1.0 + s.u * s.u * s.tau / (4.0 * s.d))) -
                  ((x - s.xs) * s.u * std::cos(s.phi) + (y - s.ys) * s.u * std::sin(s.phi)) / (2.0 * s.d));
}

inline double length_scale(const Source& s) {
  return std::sqrt(s.d * s.tau / (1.0 + s.u * s.u * s.tau / (4.0 * s.d)));
}

inline double gaussian(double z, double mean, double sigma) {
  const double t = (z - mean) / sigma;
  return std::exp(-0.5 * t * t) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

struct Reading {
  double x, y, c;
};

// Posterior over a finite hypothesis set by direct enumeration: prior times
// the product of sensor densities, accumulated in long double.
inline std::vector<double> enumerate_posterior(const std::vector<Source>& hyps, const std::vector<double>& prior,
                                               const std::vector<Reading>& readings, double alpha, double beta) {
  std::vector<long double> logp(hyps.size());
  long double top = -INFINITY;
  for (std::size_t h = 0; h < hyps.size(); ++h) {
    long double lp = std::log(static_cast<long double>(prior[h]));
    for (const Reading& r : readings) {
      const double m = plume(r.x, r.y, hyps[h]);
      const double sigma = alpha * m + beta;
      const long double t = (r.c - m) / sigma;
      lp += -0.5L * t * t - std::log(static_cast<long double>(sigma)) - 0.5L * std::log(2.0L * std::numbers::pi_v<long double>);
    }
    logp[h] = lp;
    if (lp > top) top = lp;
  }
  long double total = 0.0L;
  for (long double& v : logp) total += (v = std::exp(v - top));
  std::vector<double> out(hyps.size());
  for (std::size_t h = 0; h < hyps.size(); ++h) out[h] = static_cast<double>(logp[h] / total);
  return out;
}

// Systematic resampling written as "how many pointers u0 + k/N fall into
// each cumulative-weight interval".
inline std::vector<std::size_t> systematic_counts(const std::vector<double>& w, double u0) {
  const std::size_t n = w.size();
  std::vector<std::size_t> counts(n, 0);
  double lo = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double hi = (i + 1 == n) ? 1.0 + 1e-12 : lo + w[i];
    for (std::size_t k = 0; k < n; ++k) {
      const double p = u0 + static_cast<double>(k) / static_cast<double>(n);
      if (p >= lo && p < hi) ++counts[i];
    }
    lo = hi;
  }
  return counts;
}

// Two point hypotheses at positions a and b with prior masses (wa, 1 - wa),
// whose mean readings at the candidate are ma and mb. The expected trace of
// the posterior position covariance, integrating the reading over the
// two-component Gaussian mixture with the trapezoid rule.
inline double two_hypothesis_epv(double wa, double ma, double sa, double mb, double sb, double sep2) {
  const double lo = std::min(ma - 12.0 * sa, mb - 12.0 * sb);
  const double hi = std::max(ma + 12.0 * sa, mb + 12.0 * sb);
  const int n = 200000;
  const double h = (hi - lo) / n;
  double acc = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double z = lo + h * k;
    const double pa = wa * gaussian(z, ma, sa);
    const double pb = (1.0 - wa) * gaussian(z, mb, sb);
    const double evidence = pa + pb;
    if (evidence <= 0.0) continue;
    const double post_a = pa / evidence;
    const double trace = post_a * (1.0 - post_a) * sep2;
    acc += (k == 0 || k == n ? 0.5 : 1.0) * evidence * trace;
  }
  return acc * h;
}

inline double histogram_entropy(const std::vector<std::size_t>& counts) {
  double n = 0.0;
  for (std::size_t c : counts) n += static_cast<double>(c);
  double h = 0.0;
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return h;
}

// Pearson chi-square statistic against equal expected counts.
inline double chi_square_uniform(const std::vector<std::size_t>& counts) {
  double n = 0.0;
  for (std::size_t c : counts) n += static_cast<double>(c);
  const double e = n / static_cast<double>(counts.size());
  double x2 = 0.0;
  for (std::size_t c : counts) x2 += (static_cast<double>(c) - e) * (static_cast<double>(c) - e) / e;
  return x2;
}

}  // namespace oracle
