#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "genrep/models.hpp"
#include "genrep/random.hpp"
#include "genrep/variational.hpp"

namespace genrep {

struct HeldoutEntry {
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  double value = 0.0;
};

struct EvalReport {
  std::string metric;
  double value = 0.0;
  double stddev = 0.0;
  int n_samples = 0;
  std::string convention;
};

/// Mean held-out log-likelihood per entry at each latent sample, averaged
/// over samples; stddev is the sample standard deviation across samples.
EvalReport predictive_log_likelihood(const Model& model, std::span<const Eigen::VectorXd> samples,
                                     std::span<const HeldoutEntry> heldout);

/// Same, with `n_samples` draws from q.
EvalReport predictive_log_likelihood(const Model& model, const MeanField& q, std::span<const HeldoutEntry> heldout,
                                     int n_samples, Rng& rng);

/// exp(-sum c log p(w | d) / sum c) over held-out (document, word, count)
/// entries, with p(w | d) = rate_dw / sum_w' rate_dw'.
double perplexity(const Eigen::MatrixXd& rates, std::span<const HeldoutEntry> heldout);

/// Perplexity of a DEF at one draw from q.
EvalReport perplexity(const SparseGammaDef& model, const MeanField& q, std::span<const HeldoutEntry> heldout,
                      Rng& rng);

inline constexpr const char* kPerplexityConvention = "p(w|d) = rate_dw / sum_w rate_dw";

struct TokenSplit {
  Eigen::MatrixXd train;
  std::vector<HeldoutEntry> heldout;  // held-out token counts per (doc, word)
};

/// Holds out round(fraction * n_d) word tokens of every document d, chosen
/// uniformly without replacement.
TokenSplit split_tokens(const Eigen::MatrixXd& counts, double fraction, Rng& rng);

struct EntrySplit {
  Eigen::MatrixXd mask;  // 1 = observed in training
  std::vector<HeldoutEntry> heldout;
};

/// Holds out round(fraction * size) entries chosen uniformly without
/// replacement.
EntrySplit split_entries(const Eigen::MatrixXd& data, double fraction, Rng& rng);

}  // namespace genrep
