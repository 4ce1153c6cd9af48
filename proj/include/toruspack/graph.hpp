#pragma once

// Discrete calculus on weighted graphs: edge flows, gradient, divergence,
// the weighted graph Laplacian, a kernel-aware conjugate-gradient solve, and
// a brute-force isoperimetric constant for desk-scale graphs.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "errors.hpp"

namespace toruspack {

// Canonical undirected edge: first < second.
using EdgeKey = std::array<int, 2>;

using VertexVector = std::vector<double>;
using EdgeWeight = std::vector<double>;

// Antisymmetric edge function, stored on the canonical (min,max) orientation.
using Flow = std::vector<double>;

struct Graph {
  int num_vertices = 0;
  std::vector<EdgeKey> edges;  // canonical keys, sorted lexicographically

  int num_edges() const { return static_cast<int>(edges.size()); }
};

inline double max_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double a : v) m = std::max(m, std::abs(a));
  return m;
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double a : v) s += a;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline void project_mean_zero(std::vector<double>& v) {
  const double m = mean(v);
  for (double& a : v) a -= m;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline bool is_connected(const Graph& g) {
  if (g.num_vertices <= 0) return false;
  std::vector<std::vector<int>> adj(g.num_vertices);
  for (const EdgeKey& e : g.edges) {
    adj[e[0]].push_back(e[1]);
    adj[e[1]].push_back(e[0]);
  }
  std::vector<char> seen(g.num_vertices, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int w : adj[v])
      if (!seen[w]) {
        seen[w] = 1;
        ++count;
        stack.push_back(w);
      }
  }
  return count == g.num_vertices;
}

// (grad f)_ij = eta_ij (f_j - f_i), reported on the canonical orientation.
inline Flow gradient(const Graph& g, const EdgeWeight& eta, const VertexVector& f) {
  if (static_cast<int>(f.size()) != g.num_vertices)
    throw std::invalid_argument("gradient: vertex vector size mismatch");
  if (eta.size() != g.edges.size())
    throw std::invalid_argument("gradient: edge weight size mismatch");
  Flow x(g.edges.size());
  for (std::size_t e = 0; e < g.edges.size(); ++e)
    x[e] = eta[e] * (f[g.edges[e][1]] - f[g.edges[e][0]]);
  return x;
}

// div(x)_i = sum over neighbours j of x_ij; edges are accumulated in their
// sorted canonical order so the result is bitwise reproducible.
inline VertexVector divergence(const Graph& g, const Flow& x) {
  if (x.size() != g.edges.size())
    throw std::invalid_argument("divergence: flow size mismatch");
  VertexVector d(g.num_vertices, 0.0);
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    d[g.edges[e][0]] += x[e];
    d[g.edges[e][1]] -= x[e];
  }
  return d;
}

// The weighted Laplacian as the literal composition div(grad f). Negative
// semidefinite; its kernel on a connected graph is the constants.
inline VertexVector laplacian_apply(const Graph& g, const EdgeWeight& eta,
                                    const VertexVector& f) {
  return divergence(g, gradient(g, eta, f));
}

// Solves laplacian(x) = y for the mean-zero x, by conjugate gradients on the
// positive-definite complement of the kernel. y must have zero mean up to
// rounding slack; the residual is measured against the mean-projected y.
inline VertexVector solve_laplacian(const Graph& g, const EdgeWeight& eta,
                                    const VertexVector& y, double tol = 1e-12) {
  if (static_cast<int>(y.size()) != g.num_vertices)
    throw std::invalid_argument("solve_laplacian: right-hand side size mismatch");
  if (eta.size() != g.edges.size())
    throw std::invalid_argument("solve_laplacian: edge weight size mismatch");
  for (double w : eta)
    if (!(w > 0.0))
      throw std::invalid_argument("solve_laplacian: edge weights must be positive");

  const double ymax = max_norm(y);
  if (ymax == 0.0) return VertexVector(g.num_vertices, 0.0);
  double ysum = 0.0;
  for (double a : y) ysum += a;
  if (std::abs(ysum) > 1e-9 * ymax)
    throw NotMeanZero("solve_laplacian: right-hand side has mean " +
                      std::to_string(ysum / g.num_vertices));
  if (!is_connected(g)) throw Disconnected("solve_laplacian: graph is not connected");

  // b = -projected y, so that the system (-laplacian) x = b is SPD on the
  // mean-zero subspace.
  VertexVector b = y;
  project_mean_zero(b);
  for (double& a : b) a = -a;
  const double bmax = max_norm(b);
  if (bmax == 0.0) return VertexVector(g.num_vertices, 0.0);

  VertexVector diag(g.num_vertices, 0.0);
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    diag[g.edges[e][0]] += eta[e];
    diag[g.edges[e][1]] += eta[e];
  }

  auto apply_a = [&](const VertexVector& v) {
    VertexVector av = laplacian_apply(g, eta, v);
    for (double& a : av) a = -a;
    return av;
  };
  auto precondition = [&](const VertexVector& r) {
    VertexVector z(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) z[i] = r[i] / diag[i];
    project_mean_zero(z);
    return z;
  };

  VertexVector x(g.num_vertices, 0.0);
  VertexVector r = b;
  VertexVector z = precondition(r);
  VertexVector p = z;
  double rz = dot(r, z);

  const int max_iter = 50 * g.num_vertices;
  for (int it = 0; it < max_iter; ++it) {
    if (max_norm(r) <= tol * bmax) {
      // Confirm with the true residual; the recurrence can drift.
      VertexVector ax = apply_a(x);
      for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - ax[i];
      if (max_norm(r) <= tol * bmax) {
        project_mean_zero(x);
        return x;
      }
      z = precondition(r);
      p = z;
      rz = dot(r, z);
    }
    VertexVector ap = apply_a(p);
    const double pap = dot(p, ap);
    if (!(pap > 0.0))
      throw NoConvergence("solve_laplacian: breakdown, p'Ap = " + std::to_string(pap));
    const double alpha = rz / pap;
    for (int i = 0; i < g.num_vertices; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    project_mean_zero(x);
    z = precondition(r);
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (int i = 0; i < g.num_vertices; ++i) p[i] = z[i] + beta * p[i];
  }
  throw NoConvergence("solve_laplacian: residual " + std::to_string(max_norm(r) / bmax) +
                      " after " + std::to_string(max_iter) + " iterations");
}

// Smallest C with min(|U|, |V \ U|) <= C |boundary U|^2 over all vertex
// subsets, where subsets are weighed by the squared lengths of their interior
// edges and boundaries by plain length. Exhaustive over all 2^V subsets, so
// gated to 20 vertices. Disconnected graphs have no finite constant.
inline double isoperimetric_constant(const Graph& g, const std::vector<double>& lengths) {
  if (g.num_vertices > 20)
    throw TooLarge("isoperimetric_constant: " + std::to_string(g.num_vertices) +
                   " vertices is above the brute-force gate of 20");
  if (g.num_vertices < 2)
    throw std::invalid_argument("isoperimetric_constant: need at least two vertices");
  if (lengths.size() != g.edges.size())
    throw std::invalid_argument("isoperimetric_constant: length size mismatch");
  for (double l : lengths)
    if (!(l > 0.0))
      throw std::invalid_argument("isoperimetric_constant: lengths must be positive");

  double total = 0.0;
  for (double l : lengths) total += l * l;

  double best = 0.0;
  const std::uint32_t full = (1u << g.num_vertices) - 1u;
  for (std::uint32_t mask = 1; mask < full; ++mask) {
    double inside = 0.0;
    double boundary = 0.0;
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
      const bool a = (mask >> g.edges[e][0]) & 1u;
      const bool b = (mask >> g.edges[e][1]) & 1u;
      if (a && b)
        inside += lengths[e] * lengths[e];
      else if (a != b)
        boundary += lengths[e];
    }
    const double small = std::min(inside, total - inside);
    if (boundary <= 0.0) {
      if (small > 0.0) return std::numeric_limits<double>::infinity();
      continue;
    }
    best = std::max(best, small / (boundary * boundary));
  }
  return best;
}

}  // namespace toruspack
