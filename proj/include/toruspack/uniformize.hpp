#pragma once

// Flattening a circle packing metric on a torus: the derivative of corner
// angles in the conformal factor, the curvature Jacobian (a negative weighted
// Laplacian), Newton's method with a backtracking line search, and a
// curvature-decay continuation flow integrated by classical Runge-Kutta.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "graph.hpp"
#include "mesh.hpp"
#include "packing.hpp"

namespace toruspack {

// d theta^i_{jk} / d u_j inside one face ijk. Symmetric in i and j, which is
// what makes the curvature Jacobian a Laplacian.
inline double angle_derivative(double r_i, double r_j, double r_k, double cos_ij, double cos_ik,
                               double cos_jk, double l_ij, double l_ik, double theta_i) {
  const double sin_t = std::sin(theta_i);
  if (sin_t <= 1e-14)
    throw DegenerateFace("angle_derivative: flat corner, sin " + std::to_string(sin_t));
  const double num = r_i * r_i * r_j * r_j * (1.0 - cos_ij * cos_ij) +
                     r_i * r_i * r_j * r_k * (cos_jk + cos_ij * cos_ik) +
                     r_i * r_j * r_j * r_k * (cos_ik + cos_ij * cos_jk);
  return num / (l_ik * l_ij * l_ij * l_ij * sin_t);
}

// Edge weights of the curvature Jacobian, together with the per-face blocks
// of angle derivatives they are assembled from. d_theta[f][a][b] is the
// derivative of the angle at corner a with respect to the factor at corner b;
// rows sum to zero because scaling all three radii is an isometry rescaling.
struct JacobianWeights {
  EdgeWeight eta;
  std::vector<std::array<std::array<double, 3>, 3>> d_theta;
};

inline JacobianWeights eta_weights(const Triangulation& t, const CirclePacking& p,
                                   const EdgeLengths& l, const CornerAngles& angles) {
  std::vector<double> r(p.rho.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = std::exp(p.rho[i]);

  JacobianWeights w;
  w.eta.assign(t.edges.size(), 0.0);
  w.d_theta.resize(t.triangles.size());
  for (std::size_t f = 0; f < t.triangles.size(); ++f) {
    // Pairwise data by corner slots; the edge between corners a and b is the
    // one opposite the third corner.
    const auto edge_of = [&](int a, int b) { return t.face_edges[f][3 - a - b]; };
    auto& block = w.d_theta[f];
    for (int a = 0; a < 3; ++a) {
      const int b = (a + 1) % 3;
      const int c = (a + 2) % 3;
      const double ra = r[t.triangles[f][a]];
      const double rb = r[t.triangles[f][b]];
      const double rc = r[t.triangles[f][c]];
      block[a][b] = angle_derivative(ra, rb, rc, p.cos_theta[edge_of(a, b)],
                                     p.cos_theta[edge_of(a, c)], p.cos_theta[edge_of(b, c)],
                                     l[edge_of(a, b)], l[edge_of(a, c)], angles[f][a]);
      block[a][c] = angle_derivative(ra, rc, rb, p.cos_theta[edge_of(a, c)],
                                     p.cos_theta[edge_of(a, b)], p.cos_theta[edge_of(b, c)],
                                     l[edge_of(a, c)], l[edge_of(a, b)], angles[f][a]);
      block[a][a] = -(block[a][b] + block[a][c]);
    }
    for (int c = 0; c < 3; ++c) {
      const int a = (c + 1) % 3;
      const int b = (c + 2) % 3;
      const int lo = t.triangles[f][a] < t.triangles[f][b] ? a : b;
      const int hi = lo == a ? b : a;
      w.eta[t.face_edges[f][c]] += block[lo][hi];
    }
  }
  return w;
}

inline JacobianWeights eta_weights(const Triangulation& t, const CirclePacking& p) {
  const EdgeLengths l = edge_lengths_from_packing(t, p);
  return eta_weights(t, p, l, inner_angles(t, l));
}

// dK/du as a linear operator: minus the Laplacian with the packing's weights.
struct CurvatureJacobian {
  Graph skeleton;
  JacobianWeights weights;

  VertexVector apply(const VertexVector& du) const {
    VertexVector v = laplacian_apply(skeleton, weights.eta, du);
    for (double& a : v) a = -a;
    return v;
  }
};

inline CurvatureJacobian curvature_jacobian(const Triangulation& t, const CirclePacking& p) {
  return CurvatureJacobian{t.skeleton(), eta_weights(t, p)};
}

struct NewtonOptions {
  double tol = 1e-10;  // on the sup norm of the curvature
  int max_iter = 100;
  int max_halvings = 30;
  double cg_tol = 1e-12;
  // Sup-norm cap on a single update of the log factors. Far-from-flat inputs
  // produce steps that overshoot into near-degenerate packings the search
  // cannot back out of; capping keeps consecutive metrics comparable.
  double max_step = 2.0;
};

struct FlowOptions {
  int num_steps = 64;
  double cg_tol = 1e-12;
  double polish_tol = 1e-10;
  int polish_max_iter = 100;
};

struct SolveReport {
  int iterations = 0;
  double final_residual = 0.0;
  // Newton: (step damping, residual after the step). Flow: (time, residual).
  std::vector<std::pair<double, double>> step_history;
  // Constant added afterwards by unit-area normalization; the solvers leave
  // it zero and return mean-zero factors.
  double area_shift = 0.0;
  // Flow only: deviation from the exact linear curvature decay, per stage
  // and its maximum over the integration.
  std::vector<std::pair<double, double>> decay_history;
  double decay_deviation_max = 0.0;
};

namespace detail {

struct MetricState {
  EdgeLengths lengths;
  CornerAngles angles;
  Curvature curvature;
  double residual = 0.0;
};

inline MetricState metric_state(const Triangulation& t, const CirclePacking& p,
                                const ConformalFactor& u) {
  MetricState s;
  s.lengths = edge_lengths_from_packing(t, apply_conformal_factor(p, u));
  s.angles = inner_angles(t, s.lengths);
  s.curvature = discrete_curvature(t, s.angles);
  s.residual = max_norm(s.curvature);
  return s;
}

inline std::pair<ConformalFactor, SolveReport> newton_solve(const Triangulation& t,
                                                            const CirclePacking& p,
                                                            ConformalFactor u,
                                                            const NewtonOptions& opt) {
  const Graph g = t.skeleton();
  project_mean_zero(u);
  MetricState state = metric_state(t, p, u);

  SolveReport rep;
  for (int it = 0; it <= opt.max_iter; ++it) {
    rep.final_residual = state.residual;
    rep.iterations = it;
    if (state.residual <= opt.tol) return {std::move(u), std::move(rep)};
    if (it == opt.max_iter) break;

    const JacobianWeights w =
        eta_weights(t, apply_conformal_factor(p, u), state.lengths, state.angles);
    // K has zero mean by Gauss-Bonnet; subtract the rounding debris so the
    // solve stays well below its mean slack even at tiny residuals.
    VertexVector rhs = state.curvature;
    project_mean_zero(rhs);
    const VertexVector d = solve_laplacian(g, w.eta, rhs, opt.cg_tol);
    const double dmax = max_norm(d);

    double damping = dmax > opt.max_step ? opt.max_step / dmax : 1.0;
    bool accepted = false;
    for (int h = 0; h < opt.max_halvings; ++h) {
      ConformalFactor trial = u;
      for (std::size_t i = 0; i < trial.size(); ++i) trial[i] += damping * d[i];
      project_mean_zero(trial);
      try {
        MetricState next = metric_state(t, p, trial);
        if (next.residual < state.residual) {
          u = std::move(trial);
          state = std::move(next);
          rep.step_history.emplace_back(damping, state.residual);
          accepted = true;
          break;
        }
      } catch (const DegenerateFace&) {
        // Step left the admissible region; shorten it.
      }
      damping *= 0.5;
    }
    if (!accepted)
      throw LostAdmissibility("newton: no admissible decreasing step after " +
                              std::to_string(opt.max_halvings) + " halvings at residual " +
                              std::to_string(state.residual));
  }
  throw NoConvergence("newton: residual " + std::to_string(rep.final_residual) + " after " +
                      std::to_string(opt.max_iter) + " iterations");
}

}  // namespace detail

// Newton's method for the mean-zero conformal factor with vanishing discrete
// curvature. Steps solve the Laplacian system of the current packing and are
// damped until they both stay admissible and decrease the residual.
inline std::pair<ConformalFactor, SolveReport> newton_uniformize(const Triangulation& t,
                                                                 const CirclePacking& p,
                                                                 const NewtonOptions& opt = {}) {
  return detail::newton_solve(t, p, ConformalFactor(t.num_vertices, 0.0), opt);
}

// Continuation along u'(t) = laplacian(u)^{-1} K0 on [0,1], where K0 is the
// initial curvature held fixed; along the exact flow the curvature decays as
// K(u(t)) = (1-t) K0. Integrated with classical fourth-order Runge-Kutta and
// finished with a Newton polish.
inline std::pair<ConformalFactor, SolveReport> continuation_flow(const Triangulation& t,
                                                                 const CirclePacking& p,
                                                                 const FlowOptions& opt = {}) {
  if (opt.num_steps < 1) throw std::invalid_argument("continuation_flow: num_steps must be >= 1");
  const Graph g = t.skeleton();

  const detail::MetricState start = detail::metric_state(t, p, ConformalFactor(t.num_vertices, 0.0));
  SolveReport rep;
  if (start.residual <= opt.polish_tol) {
    rep.final_residual = start.residual;
    return {ConformalFactor(t.num_vertices, 0.0), std::move(rep)};
  }

  VertexVector rhs = start.curvature;
  project_mean_zero(rhs);

  const auto velocity = [&](const ConformalFactor& u) {
    try {
      const CirclePacking q = apply_conformal_factor(p, u);
      const EdgeLengths l = edge_lengths_from_packing(t, q);
      const JacobianWeights w = eta_weights(t, q, l, inner_angles(t, l));
      return solve_laplacian(g, w.eta, rhs, opt.cg_tol);
    } catch (const DegenerateFace& e) {
      throw LostAdmissibility(std::string("flow: left the admissible region: ") + e.what());
    }
  };

  ConformalFactor u(t.num_vertices, 0.0);
  const double h = 1.0 / opt.num_steps;
  for (int k = 0; k < opt.num_steps; ++k) {
    const VertexVector k1 = velocity(u);
    ConformalFactor v = u;
    for (std::size_t i = 0; i < u.size(); ++i) v[i] = u[i] + 0.5 * h * k1[i];
    const VertexVector k2 = velocity(v);
    for (std::size_t i = 0; i < u.size(); ++i) v[i] = u[i] + 0.5 * h * k2[i];
    const VertexVector k3 = velocity(v);
    for (std::size_t i = 0; i < u.size(); ++i) v[i] = u[i] + h * k3[i];
    const VertexVector k4 = velocity(v);
    for (std::size_t i = 0; i < u.size(); ++i)
      u[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    project_mean_zero(u);

    const double time = static_cast<double>(k + 1) * h;
    detail::MetricState s;
    try {
      s = detail::metric_state(t, p, u);
    } catch (const DegenerateFace& e) {
      throw LostAdmissibility(std::string("flow: left the admissible region: ") + e.what());
    }
    rep.step_history.emplace_back(time, s.residual);
    double dev = 0.0;
    for (std::size_t i = 0; i < s.curvature.size(); ++i)
      dev = std::max(dev, std::abs(s.curvature[i] - (1.0 - time) * start.curvature[i]));
    rep.decay_history.emplace_back(time, dev);
    rep.decay_deviation_max = std::max(rep.decay_deviation_max, dev);
  }

  NewtonOptions polish;
  polish.tol = opt.polish_tol;
  polish.max_iter = opt.polish_max_iter;
  polish.cg_tol = opt.cg_tol;
  auto [u_final, polish_rep] = detail::newton_solve(t, p, std::move(u), polish);
  rep.iterations = opt.num_steps + polish_rep.iterations;
  rep.final_residual = polish_rep.final_residual;
  for (const auto& s : polish_rep.step_history) rep.step_history.push_back(s);
  return {std::move(u_final), std::move(rep)};
}

// Adds the constant that rescales the packing metric at u to unit total area.
inline ConformalFactor normalize_area(const Triangulation& t, const CirclePacking& p,
                                      const ConformalFactor& u) {
  const EdgeLengths l = edge_lengths_from_packing(t, apply_conformal_factor(p, u));
  const double shift = -0.5 * std::log(mesh_area(t, l));
  ConformalFactor out = u;
  for (double& a : out) a += shift;
  return out;
}

}  // namespace toruspack
