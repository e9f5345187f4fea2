#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "elastoslab/grid.hpp"

namespace elastoslab {

/// Fornberg finite-difference weights: weights of the m-th derivative at x0
/// from samples at the given nodes. Exact for polynomials up to degree
/// nodes.size()-1, hence order nodes.size()-m (plus one for symmetric cases).
inline std::vector<double> fd_weights(double x0, const std::vector<double>& nodes, int m) {
  const int n = int(nodes.size()) - 1;
  std::vector<std::vector<double>> c(std::size_t(n) + 1,
                                     std::vector<double>(std::size_t(m) + 1, 0.0));
  double c1 = 1.0;
  double c4 = nodes[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i <= n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = nodes[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = nodes[i] - nodes[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k)
        c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) w[i] = c[i][m];
  return w;
}

/// Banded-by-rows vertical derivative operator on the n3+1 slab nodes.
/// Interior rows use the smallest centered stencil of order >= 4; rows near
/// the faces use shifted stencils of the same order.
struct VerticalOperator {
  int n3 = 0;
  int order = 0;                       // derivative order m
  std::vector<int> start;              // first node of row's stencil
  std::vector<std::vector<double>> w;  // weights per row

  /// out[j] = sum_i w[j][i] * in[start[j]+i], along every vertical line.
  void apply_line(const double* in, double* out, std::ptrdiff_t stride) const {
    for (int j = 0; j <= n3; ++j) {
      double s = 0.0;
      const auto& wj = w[j];
      const double* base = in + std::ptrdiff_t(start[j]) * stride;
      for (std::size_t i = 0; i < wj.size(); ++i) s += wj[i] * base[std::ptrdiff_t(i) * stride];
      out[std::ptrdiff_t(j) * stride] = s;
    }
  }

  /// Dense (n3+1)^2 matrix form (row-major), for solver assembly.
  std::vector<double> dense() const {
    const int n = n3 + 1;
    std::vector<double> a(std::size_t(n) * n, 0.0);
    for (int j = 0; j < n; ++j)
      for (std::size_t i = 0; i < w[j].size(); ++i)
        a[std::size_t(j) * n + start[j] + i] = w[j][i];
    return a;
  }
};

inline VerticalOperator make_vertical_operator(int n3, double h3, int m) {
  // Centered width giving order >= 4: m+4 nodes for odd m, m+3 for even m
  // (the symmetric formula gains one order). Shifted rows use m+4 nodes.
  const int wc = (m % 2 == 1) ? m + 4 : m + 3;
  const int ws = m + 4;
  VerticalOperator op;
  op.n3 = n3;
  op.order = m;
  op.start.resize(n3 + 1);
  op.w.resize(n3 + 1);
  for (int j = 0; j <= n3; ++j) {
    const int r = (wc - 1) / 2;
    int s, width;
    if (j - r >= 0 && j + r <= n3) {
      s = j - r;
      width = wc;
    } else {
      width = ws;
      s = std::min(std::max(j - ws / 2, 0), n3 + 1 - width);
    }
    std::vector<double> nodes(width);
    for (int i = 0; i < width; ++i) nodes[i] = (s + i) * h3;
    op.start[j] = s;
    op.w[j] = fd_weights(j * h3, nodes, m);
    // Pin the row sum to exactly zero so constants are annihilated bitwise;
    // static equilibria then stay fixed points of the discrete flow.
    double sum = 0.0;
    for (double wv : op.w[j]) sum += wv;
    op.w[j][std::size_t(j - s)] -= sum;
  }
  return op;
}

/// Cached per-thread vertical operators keyed by (n3, order). h3 = 1/n3.
inline const VerticalOperator& vertical_operator(int n3, int m) {
  thread_local std::map<std::pair<int, int>, VerticalOperator> cache;
  auto key = std::make_pair(n3, m);
  auto it = cache.find(key);
  if (it == cache.end())
    it = cache.emplace(key, make_vertical_operator(n3, 1.0 / n3, m)).first;
  return it->second;
}

/// Dense matrix of the first-derivative operator squared (D1*D1), the
/// vertical part of the discrete Laplacian used by all elliptic solves.
/// Keeping div(grad .) and the solver operator identical makes projections
/// exact to solver tolerance.
inline const std::vector<double>& d1_squared_dense(int n3) {
  thread_local std::map<int, std::vector<double>> cache;
  auto it = cache.find(n3);
  if (it == cache.end()) {
    const int n = n3 + 1;
    const auto d1 = vertical_operator(n3, 1).dense();
    std::vector<double> sq(std::size_t(n) * n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) {
        const double a = d1[std::size_t(i) * n + k];
        if (a == 0.0) continue;
        for (int j = 0; j < n; ++j) sq[std::size_t(i) * n + j] += a * d1[std::size_t(k) * n + j];
      }
    it = cache.emplace(n3, std::move(sq)).first;
  }
  return it->second;
}

}  // namespace elastoslab
