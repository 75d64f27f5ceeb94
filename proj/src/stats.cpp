#include "ontonote/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "ontonote/error.hpp"

namespace ontonote::stats {

double TestResult::statistic(std::string_view name) const {
  for (const auto& [k, v] : statistics) {
    if (k == name) return v;
  }
  throw Error(ErrorCode::Validation, "no statistic named " + std::string(name));
}

std::size_t TestResult::size(std::string_view name) const {
  for (const auto& [k, v] : sizes) {
    if (k == name) return v;
  }
  throw Error(ErrorCode::Validation, "no sample size named " + std::string(name));
}

namespace {

void require_finite(std::span<const double> xs) {
  for (const double x : xs) {
    if (!std::isfinite(x)) throw Error(ErrorCode::Validation, "samples must be finite numbers");
  }
}

struct Ranking {
  std::vector<std::int64_t> doubled;  // 2 * mid-rank, aligned with the input
  double tie_term = 0;                // sum over tie groups of t^3 - t
  bool ties = false;
};

Ranking mid_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  Ranking r;
  r.doubled.resize(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const auto doubled = static_cast<std::int64_t>(i + j + 2);
    for (std::size_t k = i; k <= j; ++k) r.doubled[order[k]] = doubled;
    const double t = static_cast<double>(j - i + 1);
    if (j > i) {
      r.ties = true;
      r.tie_term += t * t * t - t;
    }
    i = j + 1;
  }
  return r;
}

double tail_p(std::uint64_t lo, std::uint64_t hi, double total) {
  const double tail = static_cast<double>(std::min(lo, hi));
  return std::min(1.0, 2.0 * tail / total);
}

}  // namespace

double two_sided_normal_p(double z) { return std::erfc(std::fabs(z) / std::sqrt(2.0)); }

double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  double r = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
    if (!std::isfinite(r)) return r;
  }
  return std::round(r);
}

Histogram histogram(std::span<const double> samples, double width) {
  if (samples.empty()) throw Error(ErrorCode::EmptySample, "histogram of an empty sample");
  if (!(width > 0) || !std::isfinite(width)) throw Error(ErrorCode::NonpositiveWidth, "bin width must be positive");
  require_finite(samples);

  auto bin_of = [width](double x) {
    auto k = static_cast<std::int64_t>(std::floor(x / width));
    while (static_cast<double>(k + 1) * width <= x) ++k;
    while (static_cast<double>(k) * width > x) --k;
    return k;
  };
  std::int64_t lo = bin_of(samples.front());
  std::int64_t hi = lo;
  for (const double x : samples) {
    lo = std::min(lo, bin_of(x));
    hi = std::max(hi, bin_of(x));
  }
  Histogram h;
  h.width = width;
  h.n = samples.size();
  h.bins.resize(static_cast<std::size_t>(hi - lo + 1));
  for (std::int64_t k = lo; k <= hi; ++k) {
    auto& bin = h.bins[static_cast<std::size_t>(k - lo)];
    bin.lo = static_cast<double>(k) * width;
    bin.hi = static_cast<double>(k + 1) * width;
  }
  for (const double x : samples) ++h.bins[static_cast<std::size_t>(bin_of(x) - lo)].count;
  for (auto& bin : h.bins) {
    bin.percentage = 100.0 * static_cast<double>(bin.count) / static_cast<double>(h.n);
  }
  return h;
}

MeanCI mean_ci(std::span<const double> samples, double level) {
  if (samples.empty()) throw Error(ErrorCode::EmptySample, "mean of an empty sample");
  if (!(level > 0 && level < 1)) throw Error(ErrorCode::Validation, "confidence level must lie in (0, 1)");
  require_finite(samples);

  MeanCI r;
  r.n = samples.size();
  r.level = level;
  r.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(r.n);
  if (r.n < 2) return r;

  double ss = 0;
  for (const double x : samples) ss += (x - r.mean) * (x - r.mean);
  const double sd = std::sqrt(ss / static_cast<double>(r.n - 1));
  r.sd = sd;
  const boost::math::students_t dist(static_cast<double>(r.n - 1));
  const double t = boost::math::quantile(dist, 1.0 - (1.0 - level) / 2.0);
  const double half = t * sd / std::sqrt(static_cast<double>(r.n));
  r.interval = std::make_pair(r.mean - half, r.mean + half);
  return r;
}

TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b, MethodChoice choice) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptySample, "Mann-Whitney U needs two non-empty samples");
  require_finite(a);
  require_finite(b);

  const std::size_t n1 = a.size();
  const std::size_t n2 = b.size();
  const std::size_t n = n1 + n2;
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const Ranking ranks = mid_ranks(pooled);

  std::int64_t doubled_r1 = 0;
  for (std::size_t i = 0; i < n1; ++i) doubled_r1 += ranks.doubled[i];
  const auto nn1 = static_cast<std::int64_t>(n1);
  const double u1 = static_cast<double>(doubled_r1 - nn1 * (nn1 + 1)) / 2.0;
  const double u2 = static_cast<double>(n1 * n2) - u1;

  TestResult r;
  r.test = "mann-whitney-u";
  r.statistics = {{"U1", u1}, {"U2", u2}};
  r.sizes = {{"n1", n1}, {"n2", n2}};
  r.ties = ranks.ties;

  const double labelings = binomial(n, n1);
  const bool exact = choice == MethodChoice::Exact ||
                     (choice == MethodChoice::Auto && labelings <= kMannWhitneyExactLimit);
  if (exact && labelings > 1e8) {
    throw Error(ErrorCode::Validation, "too many labelings for an exact Mann-Whitney p");
  }
  if (exact) {
    // Enumerate every choice of positions for the smaller sample; its
    // doubled rank sum determines U.
    const bool first_smaller = n1 <= n2;
    const std::size_t k = first_smaller ? n1 : n2;
    std::int64_t observed = 0;
    for (std::size_t i = 0; i < k; ++i) observed += ranks.doubled[first_smaller ? i : n1 + i];

    std::vector<std::size_t> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    std::uint64_t lo = 0;
    std::uint64_t hi = 0;
    std::uint64_t total = 0;
    for (;;) {
      std::int64_t s = 0;
      for (const std::size_t i : idx) s += ranks.doubled[i];
      lo += s <= observed ? 1 : 0;
      hi += s >= observed ? 1 : 0;
      ++total;
      std::size_t pos = k;
      while (pos > 0 && idx[pos - 1] == n - k + pos - 1) --pos;
      if (pos == 0) break;
      ++idx[pos - 1];
      for (std::size_t j = pos; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
    r.method = PMethod::Exact;
    r.p = tail_p(lo, hi, static_cast<double>(total));
    return r;
  }

  const double dn = static_cast<double>(n);
  const double mu = static_cast<double>(n1 * n2) / 2.0;
  const double var = static_cast<double>(n1 * n2) / 12.0 * ((dn + 1.0) - ranks.tie_term / (dn * (dn - 1.0)));
  r.method = PMethod::NormalApproximation;
  if (var <= 0) {
    r.z = 0.0;
    r.p = 1.0;
    return r;
  }
  const double dev = std::max(0.0, std::fabs(u1 - mu) - 0.5);
  const double z = std::copysign(dev / std::sqrt(var), u1 - mu);
  r.z = z;
  r.p = std::min(1.0, two_sided_normal_p(z));
  return r;
}

TestResult wilcoxon_signed_rank(std::span<const double> diffs, MethodChoice choice) {
  require_finite(diffs);
  std::vector<double> magnitudes;
  std::vector<bool> positive;
  std::size_t zeros = 0;
  for (const double d : diffs) {
    if (d == 0) {
      ++zeros;
      continue;
    }
    magnitudes.push_back(std::fabs(d));
    positive.push_back(d > 0);
  }
  if (magnitudes.empty()) {
    throw Error(ErrorCode::AllZeroDiffs, "Wilcoxon signed-rank needs at least one nonzero difference");
  }
  const std::size_t m = magnitudes.size();
  const Ranking ranks = mid_ranks(magnitudes);

  std::int64_t doubled_w_plus = 0;
  std::int64_t doubled_total = 0;
  for (std::size_t i = 0; i < m; ++i) {
    doubled_total += ranks.doubled[i];
    if (positive[i]) doubled_w_plus += ranks.doubled[i];
  }
  const double w_plus = static_cast<double>(doubled_w_plus) / 2.0;
  const double w_minus = static_cast<double>(doubled_total - doubled_w_plus) / 2.0;

  TestResult r;
  r.test = "wilcoxon-signed-rank";
  r.statistics = {{"W+", w_plus}, {"W-", w_minus}};
  r.sizes = {{"m", m}, {"n", diffs.size()}};
  r.ties = ranks.ties;
  r.zeros_dropped = zeros;

  const bool exact = choice == MethodChoice::Exact ||
                     (choice == MethodChoice::Auto && m <= kWilcoxonExactLimit);
  if (exact && m > 62) {
    throw Error(ErrorCode::Validation, "too many differences for an exact Wilcoxon p");
  }
  if (exact) {
    // counts[s] = number of sign assignments with doubled W+ equal to s.
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(doubled_total) + 1, 0);
    counts[0] = 1;
    std::int64_t reach = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const std::int64_t w = ranks.doubled[i];
      for (std::int64_t s = reach; s >= 0; --s) {
        counts[static_cast<std::size_t>(s + w)] += counts[static_cast<std::size_t>(s)];
      }
      reach += w;
    }
    std::uint64_t lo = 0;
    std::uint64_t hi = 0;
    for (std::int64_t s = 0; s <= doubled_total; ++s) {
      const auto c = counts[static_cast<std::size_t>(s)];
      if (s <= doubled_w_plus) lo += c;
      if (s >= doubled_w_plus) hi += c;
    }
    r.method = PMethod::Exact;
    r.p = tail_p(lo, hi, std::ldexp(1.0, static_cast<int>(m)));
    return r;
  }

  const double dm = static_cast<double>(m);
  const double mu = dm * (dm + 1.0) / 4.0;
  const double var = dm * (dm + 1.0) * (2.0 * dm + 1.0) / 24.0 - ranks.tie_term / 48.0;
  r.method = PMethod::NormalApproximation;
  const double dev = std::max(0.0, std::fabs(w_plus - mu) - 0.5);
  const double z = std::copysign(dev / std::sqrt(var), w_plus - mu);
  r.z = z;
  r.p = std::min(1.0, two_sided_normal_p(z));
  return r;
}

std::vector<double> paired_differences(const std::map<std::string, double>& before,
                                       const std::map<std::string, double>& after) {
  std::vector<double> out;
  for (const auto& [student, value] : after) {
    const auto it = before.find(student);
    if (it != before.end()) out.push_back(value - it->second);
  }
  if (out.empty()) throw Error(ErrorCode::EmptyIntersection, "no student appears in both samples");
  return out;
}

}  // namespace ontonote::stats
