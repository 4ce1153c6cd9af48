#pragma once

// Circle packing metrics on triangulated tori: induced edge lengths, the
// conformal action on log radii, corner angles, discrete curvature, total
// area, and the regularity report used by the solvers.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "errors.hpp"
#include "mesh.hpp"

namespace toruspack {

// Packing data: a log radius per vertex and the cosine of the intersection
// weight per canonical edge, with cos_theta in [0,1].
struct CirclePacking {
  std::vector<double> rho;
  std::vector<double> cos_theta;
};

using EdgeLengths = std::vector<double>;
using ConformalFactor = std::vector<double>;
using Curvature = std::vector<double>;

// Per face, slot c holds the inner angle at triangles[f][c].
using CornerAngles = std::vector<std::array<double, 3>>;

// Strictness slack for the triangle inequality, relative to the perimeter.
inline constexpr double triangle_slack = 1e-12;

// Allowed overshoot of a law-of-cosines value beyond [-1,1] before a face is
// treated as degenerate rather than rounded.
inline constexpr double cosine_clamp_slack = 1e-12;

inline bool triangle_inequality_ok(double a, double b, double c) {
  if (!(a > 0.0) || !(b > 0.0) || !(c > 0.0)) return false;
  const double slack = triangle_slack * (a + b + c);
  return a + b - c > slack && b + c - a > slack && c + a - b > slack;
}

// Inner angle opposite side a in a triangle with sides a, b, c.
inline double corner_angle(double a, double b, double c) {
  double q = (b * b + c * c - a * a) / (2.0 * b * c);
  if (q > 1.0) {
    if (q > 1.0 + cosine_clamp_slack)
      throw DegenerateFace("corner_angle: cosine " + std::to_string(q));
    q = 1.0;
  } else if (q < -1.0) {
    if (q < -1.0 - cosine_clamp_slack)
      throw DegenerateFace("corner_angle: cosine " + std::to_string(q));
    q = -1.0;
  }
  return std::acos(q);
}

// Heron's formula in the rearrangement that stays accurate on thin triangles.
inline double triangle_area(double a, double b, double c) {
  if (a < b) std::swap(a, b);
  if (b < c) std::swap(b, c);
  if (a < b) std::swap(a, b);
  const double t = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
  return 0.25 * std::sqrt(std::max(t, 0.0));
}

namespace detail {

inline std::array<double, 3> face_lengths(const Triangulation& t, const EdgeLengths& l,
                                          std::size_t f) {
  return {l[t.face_edges[f][0]], l[t.face_edges[f][1]], l[t.face_edges[f][2]]};
}

inline void check_faces(const Triangulation& t, const EdgeLengths& l) {
  for (std::size_t f = 0; f < t.triangles.size(); ++f) {
    const auto [a, b, c] = face_lengths(t, l, f);
    if (!triangle_inequality_ok(a, b, c))
      throw DegenerateFace("face " + std::to_string(f) + " violates the triangle inequality: " +
                           std::to_string(a) + ", " + std::to_string(b) + ", " +
                           std::to_string(c));
  }
}

inline void check_packing_sizes(const Triangulation& t, const CirclePacking& p) {
  if (static_cast<int>(p.rho.size()) != t.num_vertices)
    throw std::invalid_argument("packing: rho size does not match the vertex count");
  if (p.cos_theta.size() != t.edges.size())
    throw std::invalid_argument("packing: cos_theta size does not match the edge count");
  for (double c : p.cos_theta)
    if (!(c >= 0.0 && c <= 1.0))
      throw std::invalid_argument("packing: cos_theta " + std::to_string(c) +
                                  " outside [0,1]");
}

}  // namespace detail

// l_ij^2 = r_i^2 + r_j^2 + 2 r_i r_j cos(theta_ij) with r = exp(rho). Throws
// when some face of the induced metric violates the triangle inequality.
inline EdgeLengths edge_lengths_from_packing(const Triangulation& t, const CirclePacking& p) {
  detail::check_packing_sizes(t, p);
  std::vector<double> r(p.rho.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = std::exp(p.rho[i]);
  EdgeLengths l(t.edges.size());
  for (std::size_t e = 0; e < t.edges.size(); ++e) {
    const double ri = r[t.edges[e][0]];
    const double rj = r[t.edges[e][1]];
    l[e] = std::sqrt(ri * ri + rj * rj + 2.0 * ri * rj * p.cos_theta[e]);
  }
  detail::check_faces(t, l);
  return l;
}

// The discrete conformal action: u shifts log radii vertexwise.
inline CirclePacking apply_conformal_factor(const CirclePacking& p, const ConformalFactor& u) {
  if (u.size() != p.rho.size())
    throw std::invalid_argument("apply_conformal_factor: factor size mismatch");
  CirclePacking out = p;
  for (std::size_t i = 0; i < u.size(); ++i) out.rho[i] += u[i];
  return out;
}

inline CornerAngles inner_angles(const Triangulation& t, const EdgeLengths& l) {
  if (l.size() != t.edges.size())
    throw std::invalid_argument("inner_angles: length size mismatch");
  CornerAngles angles(t.triangles.size());
  for (std::size_t f = 0; f < t.triangles.size(); ++f) {
    const auto [a, b, c] = detail::face_lengths(t, l, f);
    if (!triangle_inequality_ok(a, b, c))
      throw DegenerateFace("face " + std::to_string(f) + " violates the triangle inequality: " +
                           std::to_string(a) + ", " + std::to_string(b) + ", " +
                           std::to_string(c));
    angles[f] = {corner_angle(a, b, c), corner_angle(b, c, a), corner_angle(c, a, b)};
  }
  return angles;
}

// K_i = 2 pi minus the sum of inner angles at i, accumulated in face order.
inline Curvature discrete_curvature(const Triangulation& t, const CornerAngles& angles) {
  if (angles.size() != t.triangles.size())
    throw std::invalid_argument("discrete_curvature: angle size mismatch");
  Curvature k(t.num_vertices, 2.0 * std::numbers::pi);
  for (std::size_t f = 0; f < t.triangles.size(); ++f)
    for (int c = 0; c < 3; ++c) k[t.triangles[f][c]] -= angles[f][c];
  return k;
}

inline double mesh_area(const Triangulation& t, const EdgeLengths& l) {
  if (l.size() != t.edges.size()) throw std::invalid_argument("mesh_area: length size mismatch");
  detail::check_faces(t, l);
  double area = 0.0;
  for (std::size_t f = 0; f < t.triangles.size(); ++f) {
    const auto [a, b, c] = detail::face_lengths(t, l, f);
    area += triangle_area(a, b, c);
  }
  return area;
}

// Uniform packing (constant log radius) reproducing the given lengths, when
// one with all weights cos-bounded below by eps exists. The radius is half
// the longest edge, so that edge carries weight cosine exactly one.
inline CirclePacking fit_uniform_packing(const Triangulation& t, const EdgeLengths& l,
                                         double eps) {
  if (!(eps >= 0.0 && eps < 1.0))
    throw std::invalid_argument("fit_uniform_packing: eps must lie in [0,1)");
  if (l.size() != t.edges.size())
    throw std::invalid_argument("fit_uniform_packing: length size mismatch");
  for (double v : l)
    if (!(v > 0.0)) throw std::invalid_argument("fit_uniform_packing: lengths must be positive");
  detail::check_faces(t, l);

  const double lmax = *std::max_element(l.begin(), l.end());
  const double r0 = 0.5 * lmax;
  CirclePacking p;
  p.rho.assign(t.num_vertices, std::log(r0));
  p.cos_theta.resize(l.size());
  for (std::size_t e = 0; e < l.size(); ++e) {
    const double c = (l[e] * l[e]) / (2.0 * r0 * r0) - 1.0;
    if (c < eps)
      throw NotUniformlyPackable("edge {" + std::to_string(t.edges[e][0]) + "," +
                                 std::to_string(t.edges[e][1]) + "} needs cos_theta " +
                                 std::to_string(c) + " < eps " + std::to_string(eps));
    p.cos_theta[e] = c;
  }
  return p;
}

// Both regularity conditions at level eps: every weight cosine at least eps
// and every inner angle at least eps, plus the resulting degree bound.
struct RegularityReport {
  bool regular = false;
  bool weights_ok = false;
  bool angles_ok = false;
  bool degenerate = false;  // some face failed the triangle inequality
  double min_cos_theta = 0.0;
  double min_corner_angle = 0.0;
  double mesh_size = 0.0;  // largest edge length
  int degree_bound = 0;    // ceil(2 pi / eps)
  int max_degree = 0;
};

inline RegularityReport check_regularity(const Triangulation& t, const EdgeLengths& l,
                                         const CirclePacking& p, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("check_regularity: eps must be positive");
  detail::check_packing_sizes(t, p);
  if (l.size() != t.edges.size())
    throw std::invalid_argument("check_regularity: length size mismatch");

  RegularityReport r;
  r.min_cos_theta = p.cos_theta.empty() ? 1.0
                                        : *std::min_element(p.cos_theta.begin(),
                                                            p.cos_theta.end());
  r.mesh_size = l.empty() ? 0.0 : *std::max_element(l.begin(), l.end());
  r.degree_bound = static_cast<int>(std::ceil(2.0 * std::numbers::pi / eps));
  r.max_degree = t.vertex_degrees.empty()
                     ? 0
                     : *std::max_element(t.vertex_degrees.begin(), t.vertex_degrees.end());

  try {
    const CornerAngles angles = inner_angles(t, l);
    double amin = std::numbers::pi;
    for (const auto& face : angles)
      for (double a : face) amin = std::min(amin, a);
    r.min_corner_angle = amin;
  } catch (const DegenerateFace&) {
    r.degenerate = true;
    r.min_corner_angle = 0.0;
  }

  r.weights_ok = r.min_cos_theta >= eps;
  r.angles_ok = !r.degenerate && r.min_corner_angle >= eps;
  r.regular = r.weights_ok && r.angles_ok;
  return r;
}

}  // namespace toruspack
