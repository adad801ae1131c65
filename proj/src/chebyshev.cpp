#include "chdqn/chebyshev.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "chdqn/errors.hpp"

namespace chdqn {
namespace {

double clamp_to_domain(double x) {
  if (!(std::abs(x) <= 1.0 + kChebyshevDomainTolerance)) {
    throw DomainError("Chebyshev input " + std::to_string(x) + " outside [-1, 1]");
  }
  return std::clamp(x, -1.0, 1.0);
}

}  // namespace

double chebyshev_t(int order, double x) {
  if (order < 0) throw UsageError("Chebyshev order must be non-negative");
  x = clamp_to_domain(x);
  if (order == 0) return 1.0;
  double prev = 1.0;
  double curr = x;
  for (int n = 1; n < order; ++n) {
    const double next = 2.0 * x * curr - prev;
    prev = curr;
    curr = next;
  }
  return curr;
}

void chebyshev_t_sequence(double x, std::span<double> out) {
  if (out.empty()) return;
  x = clamp_to_domain(x);
  out[0] = 1.0;
  if (out.size() == 1) return;
  out[1] = x;
  for (std::size_t n = 2; n < out.size(); ++n) {
    out[n] = 2.0 * x * out[n - 1] - out[n - 2];
  }
}

ChebyshevBasis::ChebyshevBasis(int degree, std::size_t state_dim)
    : degree_(degree), state_dim_(state_dim) {
  if (degree < 0) throw ConfigError("Chebyshev degree must be >= 0");
  if (state_dim == 0) throw ConfigError("state dimension must be >= 1");
}

std::vector<double> ChebyshevBasis::featurize(std::span<const double> state) const {
  std::vector<double> features(feature_dim());
  featurize_into(state, features);
  return features;
}

void ChebyshevBasis::featurize_into(std::span<const double> state, std::span<double> out) const {
  if (state.size() != state_dim_) {
    throw ConfigError("featurize: expected state of dimension " + std::to_string(state_dim_) +
                      ", got " + std::to_string(state.size()));
  }
  if (out.size() != feature_dim()) throw ConfigError("featurize: output span has wrong size");
  const std::size_t stride = static_cast<std::size_t>(degree_) + 1;
  for (std::size_t d = 0; d < state_dim_; ++d) {
    chebyshev_t_sequence(state[d], out.subspan(d * stride, stride));
  }
}

double gauss_chebyshev_inner_product(int n, int m, int nodes) {
  if (n < 0 || m < 0) throw UsageError("Chebyshev order must be non-negative");
  if (nodes < n + m + 1) {
    throw UsageError("Gauss-Chebyshev quadrature needs at least n + m + 1 nodes");
  }
  double sum = 0.0;
  for (int k = 1; k <= nodes; ++k) {
    const double x = std::cos((2.0 * k - 1.0) * std::numbers::pi / (2.0 * nodes));
    sum += chebyshev_t(n, x) * chebyshev_t(m, x);
  }
  return std::numbers::pi / nodes * sum;
}

}  // namespace chdqn
