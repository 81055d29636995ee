#include "genrep/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "genrep/errors.hpp"

namespace genrep {

namespace {

/// Uniform integer in [0, n) by rejection, free of modulo bias.
std::uint64_t uniform_index(std::uint64_t n, Rng& rng) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x = rng.next_u64();
  while (x >= limit) x = rng.next_u64();
  return x % n;
}

/// Draws k distinct indices out of [0, n) by a partial Fisher-Yates shuffle.
std::vector<std::int64_t> choose(std::int64_t n, std::int64_t k, Rng& rng) {
  std::vector<std::int64_t> idx(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (std::int64_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::int64_t>(uniform_index(static_cast<std::uint64_t>(n - i), rng));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  idx.resize(static_cast<std::size_t>(k));
  std::sort(idx.begin(), idx.end());
  return idx;
}

void check_fraction(double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw DomainError("held-out fraction must lie in [0, 1]");
}

}  // namespace

EvalReport predictive_log_likelihood(const Model& model, std::span<const Eigen::VectorXd> samples,
                                     std::span<const HeldoutEntry> heldout) {
  if (samples.empty()) throw DomainError("predictive_log_likelihood: no posterior samples");
  if (heldout.empty()) throw DomainError("predictive_log_likelihood: no held-out entries");
  EvalReport rep;
  rep.metric = "predictive_log_likelihood";
  rep.n_samples = static_cast<int>(samples.size());
  rep.convention = "mean log p(x_nd | z) per held-out entry";
  std::vector<double> per_sample;
  per_sample.reserve(samples.size());
  for (const auto& z : samples) {
    double s = 0.0;
    for (const auto& e : heldout) s += model.entry_log_likelihood(z, e.row, e.col, e.value);
    per_sample.push_back(s / static_cast<double>(heldout.size()));
  }
  double mean = 0.0;
  for (double v : per_sample) mean += v;
  mean /= static_cast<double>(per_sample.size());
  double ss = 0.0;
  for (double v : per_sample) ss += (v - mean) * (v - mean);
  rep.value = mean;
  rep.stddev = per_sample.size() > 1 ? std::sqrt(ss / static_cast<double>(per_sample.size() - 1)) : 0.0;
  return rep;
}

EvalReport predictive_log_likelihood(const Model& model, const MeanField& q, std::span<const HeldoutEntry> heldout,
                                     int n_samples, Rng& rng) {
  if (n_samples < 1) throw DomainError("predictive_log_likelihood: n_samples must be at least 1");
  std::vector<Eigen::VectorXd> samples;
  samples.reserve(static_cast<std::size_t>(n_samples));
  for (int s = 0; s < n_samples; ++s) samples.push_back(q.sample(rng));
  return predictive_log_likelihood(model, samples, heldout);
}

double perplexity(const Eigen::MatrixXd& rates, std::span<const HeldoutEntry> heldout) {
  if (heldout.empty()) throw DomainError("perplexity: no held-out words");
  const Eigen::VectorXd mass = rates.rowwise().sum();
  double log_sum = 0.0;
  double count = 0.0;
  for (const auto& e : heldout) {
    if (e.row < 0 || e.row >= rates.rows() || e.col < 0 || e.col >= rates.cols()) {
      throw DomainError("perplexity: held-out entry outside the rate matrix");
    }
    if (!(e.value >= 0.0)) throw DomainError("perplexity: held-out counts must be non-negative");
    if (e.value == 0.0) continue;
    if (!(mass[e.row] > 0.0) || !std::isfinite(mass[e.row])) {
      throw NumericalError("perplexity: document " + std::to_string(e.row) + " has no predicted rate mass");
    }
    log_sum += e.value * std::log(rates(e.row, e.col) / mass[e.row]);
    count += e.value;
  }
  if (count == 0.0) throw DomainError("perplexity: no held-out words");
  return std::exp(-log_sum / count);
}

EvalReport perplexity(const SparseGammaDef& model, const MeanField& q, std::span<const HeldoutEntry> heldout,
                      Rng& rng) {
  EvalReport rep;
  rep.metric = "perplexity";
  rep.n_samples = 1;
  rep.convention = kPerplexityConvention;
  rep.value = perplexity(model.rates(q.sample(rng)), heldout);
  return rep;
}

TokenSplit split_tokens(const Eigen::MatrixXd& counts, double fraction, Rng& rng) {
  check_fraction(fraction);
  TokenSplit out;
  out.train = counts;
  for (Eigen::Index d = 0; d < counts.rows(); ++d) {
    // Token t belongs to the word whose cumulative count first exceeds t.
    std::vector<std::int64_t> cumulative;
    std::int64_t total = 0;
    for (Eigen::Index w = 0; w < counts.cols(); ++w) {
      const double c = counts(d, w);
      if (!(c >= 0.0) || c != std::floor(c)) throw DomainError("split_tokens: counts must be non-negative integers");
      total += static_cast<std::int64_t>(c);
      cumulative.push_back(total);
    }
    const auto k = static_cast<std::int64_t>(std::llround(fraction * static_cast<double>(total)));
    if (k == 0) continue;
    Eigen::VectorXd held = Eigen::VectorXd::Zero(counts.cols());
    for (auto t : choose(total, k, rng)) {
      const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), t);
      held[it - cumulative.begin()] += 1.0;
    }
    for (Eigen::Index w = 0; w < counts.cols(); ++w) {
      if (held[w] == 0.0) continue;
      out.train(d, w) -= held[w];
      out.heldout.push_back({d, w, held[w]});
    }
  }
  return out;
}

EntrySplit split_entries(const Eigen::MatrixXd& data, double fraction, Rng& rng) {
  check_fraction(fraction);
  EntrySplit out;
  out.mask = Eigen::MatrixXd::Ones(data.rows(), data.cols());
  const auto n = static_cast<std::int64_t>(data.size());
  const auto k = static_cast<std::int64_t>(std::llround(fraction * static_cast<double>(n)));
  for (auto flat : choose(n, k, rng)) {
    const Eigen::Index r = flat / data.cols();
    const Eigen::Index c = flat % data.cols();
    out.mask(r, c) = 0.0;
    out.heldout.push_back({r, c, data(r, c)});
  }
  return out;
}

}  // namespace genrep
