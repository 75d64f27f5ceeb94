#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ontonote::stats {

struct Bin {
  double lo = 0;  // inclusive
  double hi = 0;  // exclusive
  std::size_t count = 0;
  double percentage = 0;
};

struct Histogram {
  double width = 10.0;
  std::size_t n = 0;
  std::vector<Bin> bins;  // contiguous from the lowest to the highest occupied bin
};

/// Left-closed bins [k*width, (k+1)*width); a value on an edge lands in the
/// higher bin.
Histogram histogram(std::span<const double> samples, double width = 10.0);

struct MeanCI {
  std::size_t n = 0;
  double mean = 0;
  std::optional<double> sd;  // sample standard deviation, n >= 2
  double level = 0.95;
  std::optional<std::pair<double, double>> interval;  // n >= 2
};

/// Mean with a two-sided Student-t confidence interval.
MeanCI mean_ci(std::span<const double> samples, double level = 0.95);

enum class PMethod { Exact, NormalApproximation };
enum class MethodChoice { Auto, Exact, Normal };

struct TestResult {
  std::string test;
  std::vector<std::pair<std::string, double>> statistics;
  std::vector<std::pair<std::string, std::size_t>> sizes;
  double p = 1.0;
  std::optional<double> z;  // standardized statistic, normal approximation only
  PMethod method = PMethod::Exact;
  bool ties = false;
  std::size_t zeros_dropped = 0;

  [[nodiscard]] double statistic(std::string_view name) const;
  [[nodiscard]] std::size_t size(std::string_view name) const;
};

/// Exactness thresholds for the Auto method choice.
inline constexpr double kMannWhitneyExactLimit = 200000;  // labelings
inline constexpr std::size_t kWilcoxonExactLimit = 20;    // nonzero differences

/// Two-sample Mann-Whitney U. Reports U1 (for `a`) and U2 = n1*n2 - U1 with
/// a two-sided p.
TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                          MethodChoice choice = MethodChoice::Auto);

/// Wilcoxon signed-rank on paired differences; zeros are dropped. Reports W+
/// and W-.
TestResult wilcoxon_signed_rank(std::span<const double> diffs, MethodChoice choice = MethodChoice::Auto);

/// after - before over students present in both maps, ordered by student id.
std::vector<double> paired_differences(const std::map<std::string, double>& before,
                                       const std::map<std::string, double>& after);

/// Two-sided standard normal tail, 2*(1 - Phi(|z|)).
double two_sided_normal_p(double z);

/// Number of ways to choose k of n, as a double (saturates at +inf).
double binomial(std::size_t n, std::size_t k);

}  // namespace ontonote::stats
