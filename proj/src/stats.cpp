#include "cls/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cls {
namespace stats {

double mean(const std::vector<double>& xs) {
  double s = 0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

double stddev(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double m = mean(xs);
  double s = 0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("pearson needs two equally sized series");
  double mx = mean(xs), my = mean(ys);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double f = cdf(samples[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i + 1) / n));
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
  }
  return d;
}

double ks_critical(std::size_t n, double alpha) {
  double c;
  if (alpha == 0.01) {
    c = 1.62762;
  } else if (alpha == 0.05) {
    c = 1.35810;
  } else {
    throw std::invalid_argument("unsupported KS significance level");
  }
  return c / std::sqrt(static_cast<double>(n));
}

std::vector<double> ctmc_transient(const std::vector<std::vector<double>>& q,
                                   const std::vector<double>& p0, double t) {
  const std::size_t n = q.size();
  double uniform_rate = 0;
  for (std::size_t i = 0; i < n; ++i) uniform_rate = std::max(uniform_rate, -q[i][i]);
  if (uniform_rate == 0) return p0;
  uniform_rate *= 1.05;

  // P = I + Q / uniform_rate
  std::vector<std::vector<double>> p(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) p[i][j] = q[i][j] / uniform_rate;
    p[i][i] += 1.0;
  }

  const double qt = uniform_rate * t;
  std::vector<double> v = p0;
  std::vector<double> out(n, 0.0);
  double log_w = -qt;  // log Poisson weight at k = 0
  double tail = 1.0;
  for (std::size_t k = 0; tail > 1e-13 && k < 100000; ++k) {
    double w = std::exp(log_w);
    for (std::size_t i = 0; i < n; ++i) out[i] += w * v[i];
    tail -= w;
    // v <- v * P
    std::vector<double> next(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (v[i] == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) next[j] += v[i] * p[i][j];
    }
    v = std::move(next);
    log_w += std::log(qt) - std::log(static_cast<double>(k + 1));
  }
  return out;
}

double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("distribution size mismatch");
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

}  // namespace stats
}  // namespace cls
