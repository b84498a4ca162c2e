#include "core/hmm.hpp"

#include <cmath>
#include <cstdio>

#include "core/error.hpp"
#include "core/logspace.hpp"

namespace posehmm {

namespace {

void check_dimensions(const Matrix& output_probs, const TransitionMatrix& trans) {
  require(output_probs.rows() >= 1, PH_ERR_EMPTY_SEQUENCE, "empty sequence");
  require(trans.n_states >= 1, PH_ERR_INVALID_ARGUMENT, "transition matrix has no states");
  require(output_probs.cols() == trans.n_states, PH_ERR_DIMENSION_MISMATCH,
          "output probability matrix has " + std::to_string(output_probs.cols()) +
              " columns for " + std::to_string(trans.n_states) + " states");
  require(trans.probs.rows() == trans.n_states && trans.probs.cols() == trans.n_states,
          PH_ERR_DIMENSION_MISMATCH, "transition matrix shape mismatch");
  require(static_cast<int>(trans.end_prob.size()) == trans.n_states,
          PH_ERR_DIMENSION_MISMATCH, "end probability vector length mismatch");
  for (double b : output_probs.flat())
    require(b > 0.0 && b <= 1.0, PH_ERR_INVALID_ARGUMENT,
            "output probabilities must lie in (0, 1]");
}

}  // namespace

TransitionMatrix TransitionMatrix::uniform(int n_states) {
  TransitionMatrix t;
  t.n_states = n_states;
  t.probs = Matrix(n_states, n_states);
  t.end_prob.assign(n_states, 0.0);
  for (int i = 0; i + 1 < n_states; ++i) {
    t.probs(i, i) = 0.5;
    t.probs(i, i + 1) = 0.5;
  }
  t.probs(n_states - 1, n_states - 1) = 0.5;
  t.end_prob[n_states - 1] = 0.5;
  return t;
}

void TransitionMatrix::validate() const {
  require(n_states >= 1, PH_ERR_VALIDATION, "transition matrix has no states");
  require(probs.rows() == n_states && probs.cols() == n_states &&
              static_cast<int>(end_prob.size()) == n_states,
          PH_ERR_VALIDATION, "transition matrix shape mismatch");
  for (int i = 0; i < n_states; ++i) {
    double row_sum = end_prob[i];
    for (int j = 0; j < n_states; ++j) {
      double p = probs(i, j);
      require(p >= 0.0, PH_ERR_VALIDATION, "negative transition probability");
      if (p != 0.0)
        require(j == i || j == i + 1, PH_ERR_VALIDATION,
                "transition support is not bi-diagonal");
      row_sum += p;
    }
    require(std::abs(row_sum - 1.0) <= 1e-9, PH_ERR_VALIDATION,
            "transition row " + std::to_string(i) + " does not sum to 1");
    require(end_prob[i] >= 0.0, PH_ERR_VALIDATION, "negative end probability");
    if (i < n_states - 1)
      require(end_prob[i] == 0.0, PH_ERR_VALIDATION,
              "only the last state may exit to the end state");
  }
  require(end_prob[n_states - 1] > 0.0, PH_ERR_VALIDATION,
          "last state must have positive end probability");
}

std::vector<double> initial_distribution(int n_states) {
  std::vector<double> pi(n_states, 0.0);
  pi[0] = 1.0;
  return pi;
}

Matrix forward(const Matrix& output_probs, const TransitionMatrix& trans,
               std::span<const double> initial) {
  check_dimensions(output_probs, trans);
  require(initial.size() == static_cast<size_t>(trans.n_states),
          PH_ERR_DIMENSION_MISMATCH, "initial distribution length mismatch");
  const int T = output_probs.rows();
  const int n = trans.n_states;

  Matrix log_a(n, n, kLogZero);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (trans.probs(i, j) > 0.0) log_a(i, j) = std::log(trans.probs(i, j));

  Matrix log_alpha(T, n, kLogZero);
  for (int i = 0; i < n; ++i)
    log_alpha(0, i) = log_mul(log_clamped(initial[i]), log_clamped(output_probs(0, i)));

  for (int t = 1; t < T; ++t) {
    for (int j = 0; j < n; ++j) {
      // Bi-diagonal support: only j-1 -> j and j -> j can contribute.
      double acc = kLogZero;
      if (j > 0) acc = log_add(acc, log_mul(log_alpha(t - 1, j - 1), log_a(j - 1, j)));
      acc = log_add(acc, log_mul(log_alpha(t - 1, j), log_a(j, j)));
      log_alpha(t, j) = log_mul(acc, log_clamped(output_probs(t, j)));
    }
  }
  return log_alpha;
}

Matrix backward(const Matrix& output_probs, const TransitionMatrix& trans) {
  check_dimensions(output_probs, trans);
  const int T = output_probs.rows();
  const int n = trans.n_states;

  Matrix log_a(n, n, kLogZero);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (trans.probs(i, j) > 0.0) log_a(i, j) = std::log(trans.probs(i, j));

  Matrix log_beta(T, n, kLogZero);
  for (int i = 0; i < n; ++i) log_beta(T - 1, i) = log_clamped(trans.end_prob[i]);

  for (int t = T - 2; t >= 0; --t) {
    for (int i = 0; i < n; ++i) {
      double acc = log_mul(log_mul(log_a(i, i), log_clamped(output_probs(t + 1, i))),
                           log_beta(t + 1, i));
      if (i + 1 < n)
        acc = log_add(acc,
                      log_mul(log_mul(log_a(i, i + 1), log_clamped(output_probs(t + 1, i + 1))),
                              log_beta(t + 1, i + 1)));
      log_beta(t, i) = acc;
    }
  }
  return log_beta;
}

PosteriorTables posteriors(const Matrix& log_alpha, const Matrix& log_beta,
                           const Matrix& output_probs, const TransitionMatrix& trans) {
  check_dimensions(output_probs, trans);
  require(log_alpha.same_shape(output_probs) && log_beta.same_shape(output_probs),
          PH_ERR_DIMENSION_MISMATCH, "posterior table shape mismatch");
  const int T = output_probs.rows();
  const int n = trans.n_states;

  PosteriorTables tables;
  tables.log_alpha = log_alpha;
  tables.log_beta = log_beta;

  std::vector<double> terminal(n);
  for (int i = 0; i < n; ++i)
    terminal[i] = log_mul(log_alpha(T - 1, i), log_clamped(trans.end_prob[i]));
  double log_lik = log_sum_exp(terminal);
  require(!is_log_zero(log_lik), PH_ERR_IMPOSSIBLE_SEQUENCE, "impossible sequence");
  tables.log_likelihood = log_lik;

  tables.gamma = Matrix(T, n);
  for (int t = 0; t < T; ++t) {
    double row_sum = 0.0;
    for (int i = 0; i < n; ++i) {
      double lg = log_mul(log_alpha(t, i), log_beta(t, i));
      double g = is_log_zero(lg) ? 0.0 : std::exp(lg - log_lik);
      tables.gamma(t, i) = g;
      row_sum += g;
    }
    // Normalize exactly; removes residual rounding from the log-space path.
    if (row_sum > 0.0)
      for (int i = 0; i < n; ++i) tables.gamma(t, i) /= row_sum;
  }

  tables.xi.reserve(T > 0 ? T - 1 : 0);
  Matrix log_a(n, n, kLogZero);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (trans.probs(i, j) > 0.0) log_a(i, j) = std::log(trans.probs(i, j));
  for (int t = 0; t + 1 < T; ++t) {
    Matrix slice(n, n);
    double slice_sum = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = i; j <= i + 1 && j < n; ++j) {
        double lx = log_mul(log_mul(log_alpha(t, i), log_a(i, j)),
                            log_mul(log_clamped(output_probs(t + 1, j)), log_beta(t + 1, j)));
        double x = is_log_zero(lx) ? 0.0 : std::exp(lx - log_lik);
        slice(i, j) = x;
        slice_sum += x;
      }
    }
    if (slice_sum > 0.0)
      for (double& v : slice.flat()) v /= slice_sum;
    tables.xi.push_back(std::move(slice));
  }
  return tables;
}

double sequence_log_likelihood(const Matrix& output_probs, const TransitionMatrix& trans,
                               std::span<const double> initial) {
  Matrix log_alpha = forward(output_probs, trans, initial);
  const int T = output_probs.rows();
  const int n = trans.n_states;
  std::vector<double> terminal(n);
  for (int i = 0; i < n; ++i)
    terminal[i] = log_mul(log_alpha(T - 1, i), log_clamped(trans.end_prob[i]));
  return log_sum_exp(terminal);
}

TransitionStats::TransitionStats(int n_states)
    : xi_sum(n_states, n_states), terminal_gamma(n_states, 0.0) {}

void TransitionStats::accumulate(const PosteriorTables& tables) {
  accumulate(tables.gamma, tables.xi);
}

void TransitionStats::accumulate(const Matrix& gamma, std::span<const Matrix> xi) {
  for (const Matrix& slice : xi)
    for (int i = 0; i < xi_sum.rows(); ++i)
      for (int j = 0; j < xi_sum.cols(); ++j) xi_sum(i, j) += slice(i, j);
  int T = gamma.rows();
  for (int i = 0; i < xi_sum.rows(); ++i) terminal_gamma[i] += gamma(T - 1, i);
}

void TransitionStats::accumulate_one_hot(const Matrix& gamma) {
  int T = gamma.rows();
  int n = gamma.cols();
  auto argmax = [&](int t) {
    int best = 0;
    for (int i = 1; i < n; ++i)
      if (gamma(t, i) > gamma(t, best)) best = i;
    return best;
  };
  for (int t = 0; t + 1 < T; ++t) xi_sum(argmax(t), argmax(t + 1)) += 1.0;
  terminal_gamma[argmax(T - 1)] += 1.0;
}

TransitionMatrix update_transitions(const TransitionStats& stats,
                                    const TransitionMatrix& prev) {
  const int n = prev.n_states;
  require(stats.xi_sum.rows() == n && stats.xi_sum.cols() == n,
          PH_ERR_DIMENSION_MISMATCH, "transition statistics shape mismatch");
  TransitionMatrix next;
  next.n_states = n;
  next.probs = Matrix(n, n);
  next.end_prob.assign(n, 0.0);

  for (int i = 0; i < n; ++i) {
    double exits = (i == n - 1) ? stats.terminal_gamma[i] : 0.0;
    double total = exits;
    for (int j = 0; j < n; ++j) total += stats.xi_sum(i, j);
    if (total <= 0.0) {
      // State received no posterior mass; keep the previous row.
      for (int j = 0; j < n; ++j) next.probs(i, j) = prev.probs(i, j);
      next.end_prob[i] = prev.end_prob[i];
      continue;
    }
    next.probs(i, i) = stats.xi_sum(i, i) / total;
    if (i + 1 < n) next.probs(i, i + 1) = stats.xi_sum(i, i + 1) / total;
    next.end_prob[i] = exits / total;
  }
  return next;
}

double enumerate_likelihood_oracle(const Matrix& output_probs, const TransitionMatrix& trans,
                                   std::span<const double> initial) {
  check_dimensions(output_probs, trans);
  require(initial.size() == static_cast<size_t>(trans.n_states),
          PH_ERR_DIMENSION_MISMATCH, "initial distribution length mismatch");
  const int T = output_probs.rows();
  const int n = trans.n_states;

  double paths = std::pow(static_cast<double>(n), static_cast<double>(T));
  require(paths <= 1e7, PH_ERR_TOO_LARGE, "path enumeration too large");

  long long count = 1;
  for (int t = 0; t < T; ++t) count *= n;

  double total = 0.0;
  std::vector<int> path(T);
  for (long long code = 0; code < count; ++code) {
    long long rest = code;
    for (int t = 0; t < T; ++t) {
      path[t] = static_cast<int>(rest % n);
      rest /= n;
    }
    double p = initial[path[0]] * output_probs(0, path[0]);
    for (int t = 1; t < T && p > 0.0; ++t)
      p *= trans.probs(path[t - 1], path[t]) * output_probs(t, path[t]);
    if (p > 0.0) p *= trans.end_prob[path[T - 1]];
    total += p;
  }
  return total > 0.0 ? std::log(total) : kLogZero;
}

}  // namespace posehmm
