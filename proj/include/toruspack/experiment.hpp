#pragma once

// Discrete-versus-smooth experiments: smooth conformal torus models, packing
// meshes sampled from them, length oracles (midpoint rule and a refined
// polyline geodesic), and the convergence study harness.

#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "mesh.hpp"
#include "packing.hpp"
#include "uniformize.hpp"

namespace toruspack {

// Smooth doubly periodic function of the lattice coordinates (period one in
// each), with its partial derivatives.
struct ScalarField {
  std::function<double(double, double)> value;
  std::function<std::array<double, 2>(double, double)> grad;
};

inline ScalarField constant_field(double c) {
  return {[c](double, double) { return c; },
          [](double, double) { return std::array<double, 2>{0.0, 0.0}; }};
}

// The stock test factor A (sin 2 pi x sin 2 pi y + cos(2 pi x) / 2).
inline ScalarField default_field(double amplitude) {
  const double a = amplitude;
  const double w = 2.0 * std::numbers::pi;
  return {[a, w](double x, double y) {
            return a * (std::sin(w * x) * std::sin(w * y) + 0.5 * std::cos(w * x));
          },
          [a, w](double x, double y) {
            return std::array<double, 2>{
                a * w * (std::cos(w * x) * std::sin(w * y) - 0.5 * std::sin(w * x)),
                a * w * std::sin(w * x) * std::cos(w * y)};
          }};
}

// Flat unit-area torus carrying the background metric g = e^{-2 ubar} flat,
// so that ubar itself is the factor making e^{2 ubar} g the flat metric.
struct SmoothTorusModel {
  Lattice lattice;
  ScalarField ubar;
  double amplitude = 0.0;

  double ubar_at(Vec2 p) const {
    const Vec2 f = lattice.to_fractional(p);
    return ubar.value(f.x, f.y);
  }

  // Cartesian gradient, by the chain rule through the lattice basis.
  Vec2 ubar_grad_at(Vec2 p) const {
    const Vec2 f = lattice.to_fractional(p);
    const auto g = ubar.grad(f.x, f.y);
    const double d = lattice.det();
    return {(g[0] * lattice.b.y - g[1] * lattice.a.y) / d,
            (g[1] * lattice.a.x - g[0] * lattice.b.x) / d};
  }

  // Log density of g against the flat lattice metric.
  double g_log_density(double fx, double fy) const { return -ubar.value(fx, fy); }
};

inline SmoothTorusModel make_hex_model(ScalarField field, double amplitude) {
  return {hexagonal_lattice(), std::move(field), amplitude};
}

// Integral over one fundamental domain, by a cells x cells composite tensor
// Gauss-Legendre rule (five points per axis per cell) in lattice coordinates.
inline double unit_cell_quadrature(const Lattice& lattice,
                                   const std::function<double(double, double)>& f,
                                   int cells = 16) {
  if (cells < 1) throw std::invalid_argument("unit_cell_quadrature: cells must be >= 1");
  static constexpr std::array<double, 5> nodes = {
      -0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831, 0.9061798459386640};
  static constexpr std::array<double, 5> weights = {
      0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
      0.2369268850561891};
  const double cell = 1.0 / cells;
  double sum = 0.0;
  for (int i = 0; i < cells; ++i)
    for (int j = 0; j < cells; ++j) {
      double block = 0.0;
      for (int a = 0; a < 5; ++a)
        for (int b = 0; b < 5; ++b) {
          const double x = (i + 0.5 + 0.5 * nodes[a]) * cell;
          const double y = (j + 0.5 + 0.5 * nodes[b]) * cell;
          block += weights[a] * weights[b] * f(x, y);
        }
      sum += block * 0.25 * cell * cell;
    }
  return sum * lattice.det();
}

// Area of e^{2 ubar} g; equals one by construction of the background, up to
// quadrature rounding.
inline double conformal_area(const SmoothTorusModel& m) {
  return unit_cell_quadrature(m.lattice, [&](double x, double y) {
    return std::exp(2.0 * (m.ubar.value(x, y) + m.g_log_density(x, y)));
  });
}

// Constant making e^{2(ubar + shift)} g have exactly unit area.
inline double reference_shift(const SmoothTorusModel& m) {
  return -0.5 * std::log(conformal_area(m));
}

// The smooth factor the discrete solutions are compared against.
inline ScalarField reference_factor(const SmoothTorusModel& m) {
  const double shift = reference_shift(m);
  const ScalarField base = m.ubar;
  return {[base, shift](double x, double y) { return base.value(x, y) + shift; }, base.grad};
}

// Midpoint-rule conformal length of the shortest lattice representative of
// the segment from p to q, measured in the background metric g.
inline double midpoint_edge_length(const SmoothTorusModel& m, Vec2 p, Vec2 q) {
  const Vec2 d = minimal_image(m.lattice, q - p);
  const Vec2 mid = p + 0.5 * d;
  return std::exp(-m.ubar_at(mid)) * norm(d);
}

namespace detail {

struct PathEval {
  double length = 0.0;
  std::vector<Vec2> grad;  // per interior node
};

// Length of the polyline through nodes in the metric e^{-2 ubar} flat, with
// five-point Gauss-Legendre quadrature per segment, and its derivatives in
// the interior nodes.
inline PathEval path_length(const SmoothTorusModel& m, const std::vector<Vec2>& nodes) {
  static constexpr std::array<double, 5> tq = {
      0.5 - 0.5 * 0.9061798459386640, 0.5 - 0.5 * 0.5384693101056831, 0.5,
      0.5 + 0.5 * 0.5384693101056831, 0.5 + 0.5 * 0.9061798459386640};
  static constexpr std::array<double, 5> wq = {
      0.5 * 0.2369268850561891, 0.5 * 0.4786286704993665, 0.5 * 0.5688888888888889,
      0.5 * 0.4786286704993665, 0.5 * 0.2369268850561891};

  PathEval out;
  const std::size_t k = nodes.size() - 1;
  out.grad.assign(k - 1, Vec2{});
  for (std::size_t i = 1; i <= k; ++i) {
    const Vec2 s = nodes[i] - nodes[i - 1];
    const double len = norm(s);
    const Vec2 unit = len > 0.0 ? (1.0 / len) * s : Vec2{};
    double f_sum = 0.0;
    Vec2 g_start{}, g_end{};
    for (std::size_t q = 0; q < 5; ++q) {
      const Vec2 c = nodes[i - 1] + tq[q] * s;
      const double f = std::exp(-m.ubar_at(c));
      const Vec2 df = -f * m.ubar_grad_at(c);
      f_sum += wq[q] * f;
      g_start = g_start + (wq[q] * (1.0 - tq[q])) * df;
      g_end = g_end + (wq[q] * tq[q]) * df;
    }
    out.length += len * f_sum;
    if (i - 1 >= 1) out.grad[i - 2] = out.grad[i - 2] + (-f_sum) * unit + len * g_start;
    if (i <= k - 1) out.grad[i - 1] = out.grad[i - 1] + f_sum * unit + len * g_end;
  }
  return out;
}

}  // namespace detail

// Conformal length of the shortest polyline with the given number of segments
// from p to the nearest lattice image of q, minimized over the interior nodes
// with a Barzilai-Borwein descent from the straight chord.
// The gradient tolerance is chosen so the remaining length error, about
// |grad|^2 over the smallest Hessian eigenvalue, sits far below rounding in
// the length itself; double precision cannot certify much tighter gradients
// because the line search stops seeing measurable decreases.
inline double geodesic_length_refined(const SmoothTorusModel& m, Vec2 p, Vec2 q, int segments,
                                      double grad_tol = 1e-7, int max_iter = 500000) {
  if (segments < 2)
    throw std::invalid_argument("geodesic_length_refined: need at least two segments");
  const Vec2 d = minimal_image(m.lattice, q - p);
  const double chord = norm(d);
  if (chord == 0.0) return 0.0;

  const std::size_t k = static_cast<std::size_t>(segments);
  std::vector<Vec2> nodes(k + 1);
  for (std::size_t i = 0; i <= k; ++i)
    nodes[i] = p + (static_cast<double>(i) / static_cast<double>(k)) * d;

  auto flat_dot = [](const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i].x * b[i].x + a[i].y * b[i].y;
    return s;
  };
  auto grad_max = [](const std::vector<Vec2>& g) {
    double s = 0.0;
    for (const Vec2& v : g) s = std::max({s, std::abs(v.x), std::abs(v.y)});
    return s;
  };

  detail::PathEval cur = detail::path_length(m, nodes);
  std::vector<Vec2> prev_interior, prev_grad;
  double alpha = chord / static_cast<double>(k);

  for (int it = 0; it < max_iter; ++it) {
    if (grad_max(cur.grad) <= grad_tol) return cur.length;

    std::vector<Vec2> interior(nodes.begin() + 1, nodes.end() - 1);
    if (!prev_interior.empty()) {
      std::vector<Vec2> sv(interior.size()), yv(interior.size());
      for (std::size_t i = 0; i < interior.size(); ++i) {
        sv[i] = interior[i] - prev_interior[i];
        yv[i] = cur.grad[i] - prev_grad[i];
      }
      const double sy = flat_dot(sv, yv);
      if (sy > 0.0) alpha = std::clamp(flat_dot(sv, sv) / sy, 1e-14 * chord, 1e6 * chord);
    }

    const double g2 = flat_dot(cur.grad, cur.grad);
    bool accepted = false;
    for (int bt = 0; bt < 60 && !accepted; ++bt) {
      std::vector<Vec2> trial = nodes;
      for (std::size_t i = 0; i + 2 <= k; ++i)
        trial[i + 1] = nodes[i + 1] - alpha * cur.grad[i];
      const detail::PathEval next = detail::path_length(m, trial);
      const double armijo = 1e-4 * alpha * g2;
      // Once the predicted decrease falls below rounding in the length, take
      // any non-increasing step; the gradient test still governs success.
      const bool measurable = armijo > 8.0 * std::numeric_limits<double>::epsilon() * cur.length;
      if ((measurable && next.length <= cur.length - armijo) ||
          (!measurable &&
           next.length <= cur.length + 8.0 * std::numeric_limits<double>::epsilon() * cur.length)) {
        prev_interior = std::move(interior);
        prev_grad = cur.grad;
        nodes = std::move(trial);
        cur = next;
        accepted = true;
      } else {
        alpha *= 0.5;
      }
    }
    if (!accepted)
      throw NoConvergence("geodesic_length_refined: line search stalled at gradient " +
                          std::to_string(grad_max(cur.grad)));
  }
  throw NoConvergence("geodesic_length_refined: gradient " + std::to_string(grad_max(cur.grad)) +
                      " after " + std::to_string(max_iter) + " iterations");
}

// Hexagonal packing mesh sampled from a smooth model: midpoint-rule edge
// lengths on the n x n torus, fitted to a uniform packing and checked for
// eps-regularity.
struct ExperimentMesh {
  Triangulation tri;
  VertexEmbedding embedding;
  EdgeLengths lengths;
  CirclePacking packing;
  RegularityReport regularity;
};

inline ExperimentMesh build_experiment_mesh(const SmoothTorusModel& m, int n, double eps) {
  if (n < 8) throw std::invalid_argument("build_experiment_mesh: n must be at least 8");
  if (!(eps > 0.0 && eps <= 0.5))
    throw std::invalid_argument("build_experiment_mesh: eps must lie in (0, 0.5]");
  if (norm(m.lattice.a - hexagonal_lattice().a) > 1e-12 ||
      norm(m.lattice.b - hexagonal_lattice().b) > 1e-12)
    throw std::invalid_argument("build_experiment_mesh: model lattice is not the hexagonal one");

  ExperimentMesh em;
  auto [tri, emb] = hex_torus(n);
  em.tri = std::move(tri);
  em.embedding = std::move(emb);
  em.lengths.resize(em.tri.edges.size());
  for (std::size_t e = 0; e < em.tri.edges.size(); ++e)
    em.lengths[e] = midpoint_edge_length(m, em.embedding.positions[em.tri.edges[e][0]],
                                         em.embedding.positions[em.tri.edges[e][1]]);
  em.packing = fit_uniform_packing(em.tri, em.lengths, eps);
  em.regularity = check_regularity(em.tri, em.lengths, em.packing, eps);
  if (!em.regularity.regular)
    throw RegularityFailure("mesh at n " + std::to_string(n) + " is not " +
                            std::to_string(eps) + "-regular: min cos " +
                            std::to_string(em.regularity.min_cos_theta) + ", min angle " +
                            std::to_string(em.regularity.min_corner_angle));
  return em;
}

enum class SolveMethod { newton, flow };

struct ConvergenceRow {
  int n = 0;
  double l_max = 0.0;
  double err_max = 0.0;
  double err_l2 = 0.0;
  int iterations = 0;
  double runtime_ms = 0.0;
};

struct StudyResult {
  std::vector<ConvergenceRow> rows;
  double fitted_order = std::numeric_limits<double>::quiet_NaN();
  double order_band = std::numeric_limits<double>::quiet_NaN();  // 95% half width
};

// Least-squares slope of log(err) against log(l), with a 95% confidence half
// width from the t distribution. NaN when an error vanishes or there are too
// few points.
inline double fit_log_slope(const std::vector<double>& l, const std::vector<double>& err,
                            double* band = nullptr) {
  if (band) *band = std::numeric_limits<double>::quiet_NaN();
  if (l.size() != err.size() || l.size() < 2)
    return std::numeric_limits<double>::quiet_NaN();
  const std::size_t n = l.size();
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(l[i] > 0.0) || !(err[i] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    xs[i] = std::log(l[i]);
    ys[i] = std::log(err[i]);
  }
  const double xm = mean(xs), ym = mean(ys);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - xm) * (xs[i] - xm);
    sxy += (xs[i] - xm) * (ys[i] - ym);
  }
  if (!(sxx > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  const double slope = sxy / sxx;
  if (band && n > 2) {
    double sse = 0.0;
    const double icpt = ym - slope * xm;
    for (std::size_t i = 0; i < n; ++i) {
      const double res = ys[i] - (icpt + slope * xs[i]);
      sse += res * res;
    }
    static constexpr std::array<double, 8> t975 = {12.706, 4.303, 3.182, 2.776,
                                                   2.571,  2.447, 2.365, 2.306};
    const std::size_t df = n - 2;
    const double tval = df <= t975.size() ? t975[df - 1] : 2.0;
    *band = tval * std::sqrt(sse / static_cast<double>(df) / sxx);
  }
  return slope;
}

// Runs the solver across mesh sizes and compares the unit-area normalized
// discrete factor with the smooth reference at the vertices. Rows are handed
// to the sink as they finish, so partial results survive a failing size.
inline StudyResult convergence_study(
    const SmoothTorusModel& m, const std::vector<int>& sizes, double eps, SolveMethod method,
    const std::function<void(const ConvergenceRow&)>& sink = {}) {
  if (sizes.empty()) throw std::invalid_argument("convergence_study: no sizes");
  for (std::size_t i = 1; i < sizes.size(); ++i)
    if (sizes[i] <= sizes[i - 1])
      throw std::invalid_argument("convergence_study: sizes must be strictly increasing");

  const double shift = reference_shift(m);
  StudyResult result;
  for (int n : sizes) {
    const auto t0 = std::chrono::steady_clock::now();
    const ExperimentMesh em = build_experiment_mesh(m, n, eps);
    std::pair<ConformalFactor, SolveReport> solved =
        method == SolveMethod::newton ? newton_uniformize(em.tri, em.packing)
                                      : continuation_flow(em.tri, em.packing);
    const ConformalFactor u = normalize_area(em.tri, em.packing, solved.first);
    const auto t1 = std::chrono::steady_clock::now();

    ConvergenceRow row;
    row.n = n;
    row.l_max = em.regularity.mesh_size;
    for (int v = 0; v < em.tri.num_vertices; ++v) {
      const double ref = m.ubar_at(em.embedding.positions[v]) + shift;
      const double diff = u[v] - ref;
      row.err_max = std::max(row.err_max, std::abs(diff));
      row.err_l2 += diff * diff;
    }
    row.err_l2 = std::sqrt(row.err_l2);
    row.iterations = solved.second.iterations;
    row.runtime_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    result.rows.push_back(row);
    if (sink) sink(row);
  }

  std::vector<double> ls, es;
  for (const ConvergenceRow& r : result.rows) {
    ls.push_back(r.l_max);
    es.push_back(r.err_max);
  }
  result.fitted_order = fit_log_slope(ls, es, &result.order_band);
  return result;
}

}  // namespace toruspack
