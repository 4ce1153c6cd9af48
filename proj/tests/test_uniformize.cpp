#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include <toruspack/toruspack.hpp>

#include "helpers.hpp"

using namespace toruspack;
namespace tt = toruspack::testing;

namespace {
constexpr double pi = std::numbers::pi;

CirclePacking tangent_uniform(const Triangulation& t, double radius) {
  CirclePacking p;
  p.rho.assign(t.num_vertices, std::log(radius));
  p.cos_theta.assign(t.edges.size(), 1.0);
  return p;
}
}  // namespace

TEST_CASE("angle_derivative on the equilateral tangent face") {
  // r = 1, tangent weights: lengths 2, angles pi/3.
  const double d = angle_derivative(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 2.0, 2.0, pi / 3.0);
  REQUIRE(d == Catch::Approx(1.0 / (2.0 * std::sqrt(3.0))).epsilon(1e-14));
  REQUIRE_THROWS_AS(angle_derivative(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 1e-15),
                    DegenerateFace);
}

TEST_CASE("angle_derivative is scale invariant and symmetric in i and j") {
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> logr(-0.7, 0.7);
  std::uniform_real_distribution<double> cosw(0.0, 1.0);
  int done = 0;
  while (done < 200) {
    const double ri = std::exp(logr(rng)), rj = std::exp(logr(rng)), rk = std::exp(logr(rng));
    const double cij = cosw(rng), cik = cosw(rng), cjk = cosw(rng);
    const auto len = [](double a, double b, double c) {
      return std::sqrt(a * a + b * b + 2.0 * a * b * c);
    };
    const double lij = len(ri, rj, cij), lik = len(ri, rk, cik), ljk = len(rj, rk, cjk);
    if (!triangle_inequality_ok(lij, lik, ljk)) continue;
    const double ti = corner_angle(ljk, lij, lik);
    const double tj = corner_angle(lik, lij, ljk);
    if (std::min(ti, tj) < 0.05 || std::max(ti, tj) > pi - 0.05) continue;
    ++done;

    const double dij = angle_derivative(ri, rj, rk, cij, cik, cjk, lij, lik, ti);
    const double dji = angle_derivative(rj, ri, rk, cij, cjk, cik, lij, ljk, tj);
    REQUIRE(dij == Catch::Approx(dji).epsilon(1e-11));

    // Scaling all radii (and so all lengths) is angle-preserving.
    const double s = 3.7;
    const double scaled = angle_derivative(s * ri, s * rj, s * rk, cij, cik, cjk, s * lij,
                                           s * lik, ti);
    REQUIRE(scaled == Catch::Approx(dij).epsilon(1e-12));
  }
}

TEST_CASE("per-face angle derivatives match finite differences") {
  const auto [t, emb] = hex_torus(3);
  std::mt19937_64 rng(73);
  const CirclePacking p = tt::random_admissible_packing(t, rng, 0.25, 0.2, 1.0);
  const EdgeLengths l = edge_lengths_from_packing(t, p);
  const CornerAngles angles = inner_angles(t, l);
  const JacobianWeights w = eta_weights(t, p, l, angles);

  const double h = 1e-6;
  for (std::size_t f = 0; f < t.triangles.size(); ++f)
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        ConformalFactor up(t.num_vertices, 0.0), um(t.num_vertices, 0.0);
        up[t.triangles[f][b]] = h;
        um[t.triangles[f][b]] = -h;
        const CornerAngles ap = inner_angles(
            t, edge_lengths_from_packing(t, apply_conformal_factor(p, up)));
        const CornerAngles am = inner_angles(
            t, edge_lengths_from_packing(t, apply_conformal_factor(p, um)));
        const double fd = (ap[f][a] - am[f][a]) / (2.0 * h);
        REQUIRE(w.d_theta[f][a][b] == Catch::Approx(fd).margin(5e-6));
      }
}

TEST_CASE("eta weights of the equilateral tangent torus") {
  const auto [t, emb] = hex_torus(4);
  const JacobianWeights w = eta_weights(t, tangent_uniform(t, 0.5));
  for (double eta : w.eta)
    REQUIRE(eta == Catch::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-13));
  for (const auto& block : w.d_theta)
    for (int a = 0; a < 3; ++a)
      REQUIRE(block[a][0] + block[a][1] + block[a][2] == 0.0);
}

TEST_CASE("curvature jacobian matches finite differences and is symmetric") {
  const auto [t, emb] = hex_torus(3);
  std::mt19937_64 rng(79);
  const CirclePacking p = tt::random_admissible_packing(t, rng, 0.2, 0.3, 1.0);

  const auto assembled = tt::dense_curvature_jacobian(t, p);
  const auto fd = tt::fd_curvature_jacobian(t, p, 1e-5);

  double scale = 0.0;
  for (const auto& row : assembled)
    for (double v : row) scale = std::max(scale, std::abs(v));
  for (int i = 0; i < t.num_vertices; ++i)
    for (int j = 0; j < t.num_vertices; ++j) {
      REQUIRE(std::abs(assembled[i][j] - fd[i][j]) <= 1e-6 * scale);
      REQUIRE(std::abs(assembled[i][j] - assembled[j][i]) <= 1e-12 * scale);
    }

  // Constants are in the kernel.
  const CurvatureJacobian op = curvature_jacobian(t, p);
  for (double v : op.apply(VertexVector(t.num_vertices, 2.5)))
    REQUIRE(std::abs(v) <= 1e-14);
}

TEST_CASE("angle difference flows divergence to curvature differences") {
  const auto [t, emb] = hex_torus(4);
  std::mt19937_64 rng(83);
  const CirclePacking pa = tt::random_admissible_packing(t, rng, 0.2, 0.3, 1.0);
  const CirclePacking pb = tt::random_admissible_packing(t, rng, 0.2, 0.3, 1.0);

  const CornerAngles aa = inner_angles(t, edge_lengths_from_packing(t, pa));
  const CornerAngles ab = inner_angles(t, edge_lengths_from_packing(t, pb));
  const Curvature ka = discrete_curvature(t, aa);
  const Curvature kb = discrete_curvature(t, ab);

  const Flow x = tt::angle_difference_flow(t, aa, ab);
  const VertexVector div = divergence(t.skeleton(), x);
  for (int v = 0; v < t.num_vertices; ++v)
    REQUIRE(div[v] == Catch::Approx(ka[v] - kb[v]).margin(1e-12));
}

TEST_CASE("newton leaves the flat torus alone") {
  const auto [t, emb] = hex_torus(4);
  const auto [u, report] = newton_uniformize(t, tangent_uniform(t, 0.5));
  REQUIRE(report.iterations == 0);
  REQUIRE(report.final_residual <= 1e-12);
  for (double v : u) REQUIRE(v == 0.0);
}

TEST_CASE("newton undoes a single-vertex radius bump exactly") {
  const auto [t, emb] = hex_torus(4);
  CirclePacking p = tangent_uniform(t, 0.5);
  const int k = 9;
  const double h = 0.05;
  p.rho[k] += h;

  const auto [u, report] = newton_uniformize(t, p);
  REQUIRE(report.final_residual <= 1e-10);
  REQUIRE(report.iterations <= 10);

  // The unique mean-zero solution shifts the bumped vertex back and spreads
  // the constant over everyone.
  const double expected_other = h / t.num_vertices;
  for (int v = 0; v < t.num_vertices; ++v) {
    const double expected = v == k ? expected_other - h : expected_other;
    REQUIRE(u[v] == Catch::Approx(expected).margin(1e-9));
  }
}

TEST_CASE("flow and newton agree on a random perturbation") {
  const auto [t, emb] = hex_torus(5);
  std::mt19937_64 rng(89);
  std::uniform_real_distribution<double> noise(-0.15, 0.15);
  CirclePacking p = tangent_uniform(t, 0.5);
  for (double& r : p.rho) r += noise(rng);

  const auto [un, rn] = newton_uniformize(t, p);
  FlowOptions fopt;
  fopt.num_steps = 32;
  const auto [uf, rf] = continuation_flow(t, p, fopt);

  REQUIRE(rn.final_residual <= 1e-10);
  REQUIRE(rf.final_residual <= 1e-10);
  for (int v = 0; v < t.num_vertices; ++v)
    REQUIRE(un[v] == Catch::Approx(uf[v]).margin(1e-8));

  // RK4 tracks the exact linear decay closely at 32 stages.
  REQUIRE(rf.decay_deviation_max <= 1e-5);
  REQUIRE_FALSE(rf.decay_history.empty());
}

TEST_CASE("uniformization factor is unique across initial packings") {
  const auto [t, emb] = hex_torus(4);
  std::mt19937_64 rng(97);
  const CirclePacking base = tt::random_admissible_packing(t, rng, 0.15, 0.4, 1.0);

  // Same discrete conformal class: radii shifted by a random factor.
  std::uniform_real_distribution<double> noise(-0.1, 0.1);
  ConformalFactor start(t.num_vertices);
  for (double& v : start) v = noise(rng);
  const CirclePacking moved = apply_conformal_factor(base, start);

  NewtonOptions opt;
  opt.tol = 1e-12;
  const auto [u1, r1] = newton_uniformize(t, base, opt);
  const auto [u2, r2] = newton_uniformize(t, moved, opt);

  const ConformalFactor t1 = normalize_area(t, base, u1);
  ConformalFactor t2 = normalize_area(t, moved, u2);
  for (std::size_t i = 0; i < t2.size(); ++i) t2[i] += start[i];

  // Total factors relative to the same base packing must coincide.
  for (std::size_t i = 0; i < t1.size(); ++i)
    REQUIRE(t1[i] == Catch::Approx(t2[i]).margin(1e-9));
}

TEST_CASE("normalize_area rescales to unit area and undoes global scaling") {
  const auto [t, emb] = hex_torus(4);
  std::mt19937_64 rng(101);
  const CirclePacking p = tt::random_admissible_packing(t, rng, 0.2, 0.3, 1.0);

  const ConformalFactor zero(t.num_vertices, 0.0);
  const ConformalFactor u = normalize_area(t, p, zero);
  const double area = mesh_area(t, edge_lengths_from_packing(t, apply_conformal_factor(p, u)));
  REQUIRE(area == Catch::Approx(1.0).margin(1e-12));

  // Doubling all radii then normalizing lands on the same metric.
  const CirclePacking doubled = apply_conformal_factor(p, ConformalFactor(t.num_vertices,
                                                                          std::log(2.0)));
  const ConformalFactor u2 = normalize_area(t, doubled, zero);
  const EdgeLengths l1 = edge_lengths_from_packing(t, apply_conformal_factor(p, u));
  const EdgeLengths l2 = edge_lengths_from_packing(t, apply_conformal_factor(doubled, u2));
  for (std::size_t e = 0; e < l1.size(); ++e)
    REQUIRE(l2[e] == Catch::Approx(l1[e]).epsilon(1e-13));
}

TEST_CASE("solvers reject out-of-range packings") {
  const auto [t, emb] = hex_torus(3);
  CirclePacking p;
  p.rho.assign(t.num_vertices, 0.0);
  p.cos_theta.assign(t.edges.size(), 1.5);
  REQUIRE_THROWS_AS(newton_uniformize(t, p), std::invalid_argument);
  REQUIRE_THROWS_AS(continuation_flow(t, p), std::invalid_argument);
}

TEST_CASE("newton recovers from a grossly oversized circle") {
  // An uncapped full step would collapse the big circle to radius exp(-273)
  // and strand the iteration; the step cap walks it back instead.
  const auto [t, emb] = hex_torus(4);
  CirclePacking p;
  p.rho.assign(t.num_vertices, 0.0);
  p.rho[0] = 6.0;
  p.cos_theta.assign(t.edges.size(), 0.0);
  const auto [u, rep] = newton_uniformize(t, p);
  REQUIRE(rep.final_residual <= 1e-10);
  REQUIRE(max_norm(testing::curvature_of(t, p, u)) <= 1e-10);
  REQUIRE(std::abs(mean(u)) <= 1e-12);
}
