#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace chdqn {

/// Inputs this far outside [-1, 1] are clamped; anything further is a DomainError.
inline constexpr double kChebyshevDomainTolerance = 1e-9;

/// T_n(x), Chebyshev polynomial of the first kind, via the three-term
/// recurrence T_{n+1} = 2x T_n - T_{n-1}.
double chebyshev_t(int order, double x);

/// Writes T_0(x) .. T_{out.size()-1}(x) into `out`.
void chebyshev_t_sequence(double x, std::span<double> out);

/// Per-dimension Chebyshev expansion of a normalized state.
///
/// The feature vector is laid out dimension-major:
///   [T_0(s_1) .. T_N(s_1), T_0(s_2) .. T_N(s_2), ..., T_0(s_D) .. T_N(s_D)]
/// T_0 is repeated for every dimension, giving D * (N + 1) features.
class ChebyshevBasis {
 public:
  ChebyshevBasis(int degree, std::size_t state_dim);

  int degree() const { return degree_; }
  std::size_t state_dim() const { return state_dim_; }
  std::size_t feature_dim() const { return state_dim_ * static_cast<std::size_t>(degree_ + 1); }

  std::vector<double> featurize(std::span<const double> state) const;
  void featurize_into(std::span<const double> state, std::span<double> out) const;

 private:
  int degree_;
  std::size_t state_dim_;
};

/// (pi / K) * sum_k T_n(x_k) T_m(x_k) over the K Gauss-Chebyshev nodes
/// x_k = cos((2k - 1) pi / (2K)). Exact for K >= n + m + 1, in which case it
/// equals the weighted inner product of T_n and T_m on [-1, 1].
double gauss_chebyshev_inner_product(int n, int m, int nodes);

}  // namespace chdqn
