#pragma once

// Reference computations used only by tests. They take deliberately naive
// routes (direct counting, numerical quadrature) so that they do not share
// code paths with the library.

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

namespace siqa::testing::oracle {

inline bool rel_close(double got, double want, double rel) {
  if (got == want) return true;
  const double scale = std::max(std::abs(got), std::abs(want));
  return std::abs(got - want) <= rel * scale;
}

inline std::map<std::string, double> group_error_rates(const std::vector<std::uint8_t>& correct,
                                                       const std::vector<std::string>& groups) {
  std::map<std::string, std::pair<int, int>> tally;  // wrong, total
  for (std::size_t i = 0; i < correct.size(); ++i) {
    auto& [wrong, total] = tally[groups[i]];
    wrong += correct[i] == 0;
    total += 1;
  }
  std::map<std::string, double> out;
  for (const auto& [g, wt] : tally) out[g] = static_cast<double>(wt.first) / wt.second;
  return out;
}

/// Student t density with nu degrees of freedom.
inline double t_density(double x, double nu) {
  const double log_c = std::lgamma((nu + 1) / 2) - std::lgamma(nu / 2) - 0.5 * std::log(nu * M_PI);
  return std::exp(log_c - (nu + 1) / 2 * std::log1p(x * x / nu));
}

/// P(T > t) for t >= 0, by composite Simpson on the tail after substituting
/// x = t / s, which maps (t, inf) onto (0, 1).
inline double t_upper_tail(double t, double nu) {
  if (t == 0.0) return 0.5;
  if (t < 0.0) return 1.0 - t_upper_tail(-t, nu);
  auto integrand = [&](double s) {
    if (s <= 0.0) return 0.0;
    return t_density(t / s, nu) * t / (s * s);
  };
  const int n = 200000;
  const double h = 1.0 / n;
  double sum = integrand(0.0) + integrand(1.0);
  for (int i = 1; i < n; ++i) sum += integrand(i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

struct PairedT {
  double t = 0.0;
  double p_two_sided = 1.0;
  double p_upper = 1.0;
  bool degenerate = false;
};

inline PairedT paired_t(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
  const double n = static_cast<double>(a.size());
  // Differences only take values -1, 0, 1, so count them.
  double plus = 0, minus = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    plus += a[i] > b[i];
    minus += a[i] < b[i];
  }
  const double mean = (plus - minus) / n;
  const double ss = plus * (1 - mean) * (1 - mean) + minus * (1 + mean) * (1 + mean) +
                    (n - plus - minus) * mean * mean;
  PairedT r;
  if (ss <= 1e-300) {
    r.degenerate = true;
    return r;
  }
  r.t = mean / std::sqrt(ss / (n - 1) / n);
  r.p_upper = t_upper_tail(r.t, n - 1);
  r.p_two_sided = 2.0 * t_upper_tail(std::abs(r.t), n - 1);
  return r;
}

/// p-value of Pearson's chi-square goodness of fit against a uniform law.
inline double chi_square_uniform_p(const std::vector<std::size_t>& counts) {
  double total = 0;
  for (auto c : counts) total += static_cast<double>(c);
  const double expected = total / static_cast<double>(counts.size());
  double stat = 0;
  for (auto c : counts) stat += (static_cast<double>(c) - expected) * (static_cast<double>(c) - expected) / expected;
  boost::math::chi_squared dist(static_cast<double>(counts.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

}  // namespace siqa::testing::oracle
