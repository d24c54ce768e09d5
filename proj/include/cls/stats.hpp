#ifndef CLS_STATS_HPP
#define CLS_STATS_HPP

#include <cstddef>
#include <functional>
#include <vector>

// Statistical checks shared by the selftest CLI and the acceptance suite.

namespace cls {
namespace stats {

double mean(const std::vector<double>& xs);
double stddev(const std::vector<double>& xs);
double pearson(const std::vector<double>& xs, const std::vector<double>& ys);

// Two-sided Kolmogorov-Smirnov statistic of the sample against a CDF.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

// Asymptotic critical value at significance 0.01 or 0.05.
double ks_critical(std::size_t n, double alpha);

// Transient distribution of a CTMC: p0 * exp(Q t), generator Q in row-major
// order (Q[i][j] = rate i->j, diagonal negative). Computed by
// uniformization, independent of any simulation path.
std::vector<double> ctmc_transient(const std::vector<std::vector<double>>& q,
                                   const std::vector<double>& p0, double t);

double total_variation(const std::vector<double>& p, const std::vector<double>& q);

}  // namespace stats
}  // namespace cls

#endif
