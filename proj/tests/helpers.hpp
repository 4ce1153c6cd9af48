#pragma once

// Shared generators and independent oracles for the test suite.

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <stdexcept>
#include <vector>

#include <toruspack/toruspack.hpp>

namespace toruspack::testing {

// Packing with log radii in [-rho_amp, rho_amp] and weight cosines in
// [cos_lo, cos_hi], resampled until every face is admissible.
inline CirclePacking random_admissible_packing(const Triangulation& t, std::mt19937_64& rng,
                                               double rho_amp, double cos_lo = 0.0,
                                               double cos_hi = 1.0) {
  std::uniform_real_distribution<double> radius(-rho_amp, rho_amp);
  std::uniform_real_distribution<double> weight(cos_lo, cos_hi);
  for (int attempt = 0; attempt < 5000; ++attempt) {
    CirclePacking p;
    p.rho.resize(t.num_vertices);
    for (double& r : p.rho) r = radius(rng);
    p.cos_theta.resize(t.edges.size());
    for (double& c : p.cos_theta) c = weight(rng);
    try {
      edge_lengths_from_packing(t, p);
      return p;
    } catch (const DegenerateFace&) {
      // resample
    }
  }
  throw std::runtime_error("random_admissible_packing: rejection sampling failed");
}

// Sides of a triangle whose inner angles are all at least min_angle, via two
// random angles and the law of sines.
inline std::array<double, 3> random_triangle_sides(std::mt19937_64& rng, double min_angle,
                                                   double scale_lo = 0.5, double scale_hi = 2.0) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double pi = std::numbers::pi;
  const double alpha = min_angle + u01(rng) * (pi - 3.0 * min_angle);
  const double beta = min_angle + u01(rng) * (pi - alpha - 2.0 * min_angle);
  const double gamma = pi - alpha - beta;
  const double s = scale_lo + u01(rng) * (scale_hi - scale_lo);
  return {s * std::sin(alpha), s * std::sin(beta), s * std::sin(gamma)};
}

inline Curvature curvature_of(const Triangulation& t, const CirclePacking& p,
                              const ConformalFactor& u) {
  const EdgeLengths l = edge_lengths_from_packing(t, apply_conformal_factor(p, u));
  return discrete_curvature(t, inner_angles(t, l));
}

// Dense curvature Jacobian by central differences in the conformal factor.
inline std::vector<std::vector<double>> fd_curvature_jacobian(const Triangulation& t,
                                                              const CirclePacking& p, double h) {
  const int n = t.num_vertices;
  std::vector<std::vector<double>> jac(n, std::vector<double>(n, 0.0));
  for (int j = 0; j < n; ++j) {
    ConformalFactor up(n, 0.0), um(n, 0.0);
    up[j] = h;
    um[j] = -h;
    const Curvature kp = curvature_of(t, p, up);
    const Curvature km = curvature_of(t, p, um);
    for (int i = 0; i < n; ++i) jac[i][j] = (kp[i] - km[i]) / (2.0 * h);
  }
  return jac;
}

// The assembled Jacobian as a dense matrix, column by column.
inline std::vector<std::vector<double>> dense_curvature_jacobian(const Triangulation& t,
                                                                 const CirclePacking& p) {
  const CurvatureJacobian op = curvature_jacobian(t, p);
  const int n = t.num_vertices;
  std::vector<std::vector<double>> jac(n, std::vector<double>(n, 0.0));
  for (int j = 0; j < n; ++j) {
    VertexVector e(n, 0.0);
    e[j] = 1.0;
    const VertexVector col = op.apply(e);
    for (int i = 0; i < n; ++i) jac[i][j] = col[i];
  }
  return jac;
}

// Edge flow combining corner angle differences of two metrics on the same
// triangulation, x_ij = sum over the faces at ij of (alpha_i - alpha_j)/3
// with alpha = to - from per corner; its divergence is the vertexwise
// curvature difference K(from) - K(to).
inline Flow angle_difference_flow(const Triangulation& t, const CornerAngles& from,
                                  const CornerAngles& to) {
  Flow x(t.edges.size(), 0.0);
  for (std::size_t f = 0; f < t.triangles.size(); ++f)
    for (int c = 0; c < 3; ++c) {
      const int a = (c + 1) % 3;
      const int b = (c + 2) % 3;
      const double alpha_a = to[f][a] - from[f][a];
      const double alpha_b = to[f][b] - from[f][b];
      const bool a_first = t.triangles[f][a] < t.triangles[f][b];
      x[t.face_edges[f][c]] += (a_first ? alpha_a - alpha_b : alpha_b - alpha_a) / 3.0;
    }
  return x;
}

// Random connected graph: a random spanning tree plus extra distinct edges.
inline Graph random_connected_graph(std::mt19937_64& rng, int nv, int extra_edges) {
  std::set<EdgeKey> edges;
  for (int v = 1; v < nv; ++v) {
    std::uniform_int_distribution<int> pick(0, v - 1);
    const int u = pick(rng);
    edges.insert({u, v});
  }
  std::uniform_int_distribution<int> any(0, nv - 1);
  for (int k = 0; k < extra_edges; ++k) {
    const int a = any(rng);
    const int b = any(rng);
    if (a != b) edges.insert({std::min(a, b), std::max(a, b)});
  }
  return Graph{nv, {edges.begin(), edges.end()}};
}

}  // namespace toruspack::testing
