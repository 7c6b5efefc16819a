// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace dmoa {

/// softmax(v / temperature) with max-subtraction.
inline std::vector<double> softmax(std::span<const double> v, double temperature = 1.0) {
  std::vector<double> out(v.size());
  if (v.empty()) return out;
  const double m = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp((v[i] - m) / temperature);
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return out;
}

/// Backpropagates `upstream` (dL/dp) through p = softmax(z): returns dL/dz.
inline std::vector<double> softmax_backward(std::span<const double> p, std::span<const double> upstream) {
  double dot = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) dot += p[i] * upstream[i];
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i] * (upstream[i] - dot);
  return out;
}

/// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace dmoa
