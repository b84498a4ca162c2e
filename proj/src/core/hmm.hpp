#pragma once

#include <span>
#include <vector>

#include "core/matrix.hpp"

namespace posehmm {

// Left-right transition model. Support is bi-diagonal: probs(i, j) may be
// nonzero only for j == i or j == i + 1. The absorbing end state is kept as
// an exit-probability vector instead of an (n+1)-th row; only the last
// state may exit. Rows are stochastic including the exit mass:
// probs(i, i) + probs(i, i+1) + end_prob[i] == 1.
struct TransitionMatrix {
  int n_states = 0;
  Matrix probs;                  // n x n
  std::vector<double> end_prob;  // n

  // Uniform left-right prior: 0.5 self / 0.5 advance, last row 0.5 self /
  // 0.5 exit. Used as the fallback row source on the first M step.
  static TransitionMatrix uniform(int n_states);

  // Throws PH_ERR_VALIDATION if any structural invariant fails.
  void validate() const;
};

// Fixed initial state distribution (1, 0, ..., 0): the bi-diagonal
// topology plus enforced end state make the chain traverse every state,
// which entails starting in the first one.
std::vector<double> initial_distribution(int n_states);

// Per-sequence inference tables, all probabilities except the log_* ones.
struct PosteriorTables {
  Matrix log_alpha;         // T x n
  Matrix log_beta;          // T x n
  Matrix gamma;             // T x n, rows sum to 1
  std::vector<Matrix> xi;   // T-1 slices of n x n, each sums to 1
  double log_likelihood = 0.0;
};

// output_probs is the T x n matrix of b_i(O_t) values in (0, 1].
// Returns T x n log_alpha with log_alpha(t, j) = log P(O_0..O_t, X_t = j).
// Entirely in log space; impossible prefixes hold the log-zero sentinel.
Matrix forward(const Matrix& output_probs, const TransitionMatrix& trans,
               std::span<const double> initial);

// Returns T x n log_beta. Base case log_beta(T-1, i) = log(end_prob[i]):
// the sequence must exit through the absorbing end state after the last
// observation.
Matrix backward(const Matrix& output_probs, const TransitionMatrix& trans);

// gamma, xi and the end-state-enforced log-likelihood
// logsumexp_i(log_alpha(T-1, i) + log end_prob[i]).
// Throws PH_ERR_IMPOSSIBLE_SEQUENCE if no path has positive probability.
PosteriorTables posteriors(const Matrix& log_alpha, const Matrix& log_beta,
                           const Matrix& output_probs,
                           const TransitionMatrix& trans);

// forward + end fold only, for scoring. Returns the log-zero sentinel
// instead of throwing when every path is impossible.
double sequence_log_likelihood(const Matrix& output_probs,
                               const TransitionMatrix& trans,
                               std::span<const double> initial);

// Expected transition counts pooled over sequences, the sufficient
// statistics for the M step. Accumulation order is fixed by the caller so
// results are bit-stable for any worker count.
struct TransitionStats {
  Matrix xi_sum;                       // n x n
  std::vector<double> terminal_gamma;  // n, summed gamma at the last frame

  explicit TransitionStats(int n_states);
  void accumulate(const PosteriorTables& tables);
  void accumulate(const Matrix& gamma, std::span<const Matrix> xi);
  // For the first M step: hard transition counts from a one-hot gamma.
  void accumulate_one_hot(const Matrix& gamma);
};

// a_ij = sum_t xi_t(i,j) / sum over all outgoing mass of i, where the
// outgoing mass of the last state includes the pooled terminal gamma as
// exit counts. Rows with zero support keep prev's row.
TransitionMatrix update_transitions(const TransitionStats& stats,
                                    const TransitionMatrix& prev);

// Exact log-likelihood by summing every state path (including the end
// exit factor). Test oracle; deliberately shares no code with forward().
// Throws PH_ERR_TOO_LARGE when n^T exceeds 1e7 paths.
double enumerate_likelihood_oracle(const Matrix& output_probs,
                                   const TransitionMatrix& trans,
                                   std::span<const double> initial);

}  // namespace posehmm
