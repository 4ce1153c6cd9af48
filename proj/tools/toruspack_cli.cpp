// Command line front end: mesh generation, packing fits, structural checks,
// uniformization, and the convergence study.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <toruspack/toruspack.hpp>

using namespace toruspack;

namespace {

Triangulation triangulation_of(const MeshFile& f) {
  return build_triangulation(f.triangles, f.num_vertices);
}

EdgeLengths lengths_of(const Triangulation& t, const MeshFile& f) {
  if (f.lengths) return edge_values_to_vector(t, *f.lengths, "lengths");
  if (f.positions && f.lattice) {
    if (static_cast<int>(f.positions->size()) != t.num_vertices)
      throw Error("positions do not match the vertex count");
    EdgeLengths l(t.edges.size());
    for (std::size_t e = 0; e < t.edges.size(); ++e)
      l[e] = norm(minimal_image(*f.lattice,
                                (*f.positions)[t.edges[e][1]] - (*f.positions)[t.edges[e][0]]));
    return l;
  }
  throw Error("mesh carries neither lengths nor positions with a lattice");
}

CirclePacking packing_of(const Triangulation& t, const MeshFile& f) {
  if (!f.rho || !f.cos_theta)
    throw Error("mesh carries no packing; run fit-packing first (rho and cos_theta required)");
  if (static_cast<int>(f.rho->size()) != t.num_vertices)
    throw Error("rho does not match the vertex count");
  return CirclePacking{*f.rho, edge_values_to_vector(t, *f.cos_theta, "cos_theta")};
}

// Eigenvalues of minus the weighted Laplacian, by cyclic Jacobi rotations.
std::vector<double> dense_spectrum(const Graph& g, const EdgeWeight& eta) {
  const int n = g.num_vertices;
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const int i = g.edges[e][0], j = g.edges[e][1];
    a[i][i] += eta[e];
    a[j][j] += eta[e];
    a[i][j] -= eta[e];
    a[j][i] -= eta[e];
  }

  double scale = 0.0;
  for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(a[i][i]));
  for (int sweep = 0; sweep < 200; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off = std::max(off, std::abs(a[p][q]));
    if (off <= 1e-13 * scale) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) <= 1e-300) continue;
        const double phi = 0.5 * std::atan2(2.0 * a[p][q], a[q][q] - a[p][p]);
        const double c = std::cos(phi), s = std::sin(phi);
        for (int k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
  }

  std::vector<double> ev(n);
  for (int i = 0; i < n; ++i) ev[i] = a[i][i];
  std::sort(ev.begin(), ev.end());
  return ev;
}

int run_gen_hex(int n, const std::string& out) {
  auto [tri, emb] = hex_torus(n);
  MeshFile f;
  f.num_vertices = tri.num_vertices;
  f.triangles = tri.triangles;
  f.positions = emb.positions;
  f.lattice = emb.lattice;
  save_mesh_file(out, f);
  std::cout << "wrote " << out << ": " << tri.num_vertices << " vertices, " << tri.num_edges()
            << " edges, " << tri.num_faces() << " faces\n";
  return 0;
}

int run_fit_packing(const std::string& mesh, double eps, std::string out) {
  if (out.empty()) out = mesh;
  MeshFile f = load_mesh_file(mesh);
  const Triangulation t = triangulation_of(f);
  const EdgeLengths l = lengths_of(t, f);
  const CirclePacking p = fit_uniform_packing(t, l, eps);

  f.rho = p.rho;
  f.cos_theta = edge_vector_to_values(t, p.cos_theta);
  f.lengths = edge_vector_to_values(t, l);
  save_mesh_file(out, f);

  const auto [cmin, cmax] = std::minmax_element(p.cos_theta.begin(), p.cos_theta.end());
  std::cout << "wrote " << out << ": uniform radius " << std::exp(p.rho[0]) << ", weight cosines in ["
            << *cmin << ", " << *cmax << "]\n";
  return 0;
}

int run_check(const std::string& mesh, double eps) {
  const MeshFile f = load_mesh_file(mesh);
  const MeshReport r = validate(f.triangles, f.num_vertices);
  std::cout << "mesh: " << r.num_vertices << " vertices, " << r.num_edges << " edges, "
            << r.num_faces << " faces, Euler characteristic " << r.euler_characteristic << '\n';
  std::cout << "degrees: min " << r.min_degree << ", max " << r.max_degree << '\n';
  if (!r.valid) {
    std::cout << "violations:\n";
    for (const std::string& v : r.violations) std::cout << "  - " << v << '\n';
    return 1;
  }
  std::cout << "status: valid torus\n";

  const Triangulation t = triangulation_of(f);
  EdgeWeight eta;
  EdgeLengths lengths;
  try {
    lengths = lengths_of(t, f);
  } catch (const Error&) {
    // no geometry in the file; combinatorics only
  }

  if (f.rho && f.cos_theta) {
    const CirclePacking p = packing_of(t, f);
    const EdgeLengths pl = edge_lengths_from_packing(t, p);
    if (lengths.empty()) lengths = pl;
    const RegularityReport reg = check_regularity(t, pl, p, eps);
    std::cout << "regularity at eps = " << eps << ": " << (reg.regular ? "regular" : "NOT regular")
              << " (min cos " << reg.min_cos_theta << ", min angle " << reg.min_corner_angle
              << ", mesh size " << reg.mesh_size << ", max degree " << reg.max_degree
              << " vs bound " << reg.degree_bound << ")\n";
    const Curvature k = discrete_curvature(t, inner_angles(t, pl));
    double sum = 0.0;
    for (double v : k) sum += v;
    std::cout << "curvature: sup " << max_norm(k) << ", sum " << sum << '\n';
    eta = eta_weights(t, p).eta;
  } else {
    std::cout << "packing: none (rho/cos_theta absent)\n";
  }

  if (t.num_vertices <= 256) {
    if (eta.empty()) eta.assign(t.edges.size(), 1.0);
    const std::vector<double> ev = dense_spectrum(t.skeleton(), eta);
    std::cout << "laplacian spectrum: lambda_1 " << ev[0] << ", lambda_2 " << ev[1]
              << ", lambda_max " << ev.back() << '\n';
  } else {
    std::cout << "laplacian spectrum: skipped (more than 256 vertices)\n";
  }

  if (!lengths.empty() && t.num_vertices <= 20)
    std::cout << "isoperimetric constant: " << isoperimetric_constant(t.skeleton(), lengths)
              << '\n';
  else
    std::cout << "isoperimetric constant: skipped ("
              << (lengths.empty() ? "no edge geometry" : "more than 20 vertices") << ")\n";
  return 0;
}

int run_uniformize(const std::string& mesh, double tol, const std::string& method,
                   const std::string& out) {
  const MeshFile f = load_mesh_file(mesh);
  const Triangulation t = triangulation_of(f);
  const CirclePacking p = packing_of(t, f);

  std::pair<ConformalFactor, SolveReport> solved;
  if (method == "newton") {
    NewtonOptions opt;
    opt.tol = tol;
    solved = newton_uniformize(t, p, opt);
  } else {
    FlowOptions opt;
    opt.polish_tol = tol;
    solved = continuation_flow(t, p, opt);
  }

  const ConformalFactor u = normalize_area(t, p, solved.first);
  solved.second.area_shift = u[0] - solved.first[0];
  const Curvature k = discrete_curvature(
      t, inner_angles(t, edge_lengths_from_packing(t, apply_conformal_factor(p, u))));
  save_solve_result(out, method, u, k, solved.second);
  std::cout << "wrote " << out << ": residual " << solved.second.final_residual << " after "
            << solved.second.iterations << " iterations, area shift " << solved.second.area_shift
            << '\n';
  return 0;
}

int run_convergence(const std::string& field, double amplitude, std::vector<int> sizes, double eps,
                    const std::string& method, const std::string& out) {
  ScalarField sf;
  if (field == "default")
    sf = default_field(amplitude);
  else if (field == "constant")
    sf = constant_field(amplitude);
  else
    sf = constant_field(0.0);
  const SmoothTorusModel m = make_hex_model(sf, field == "default" ? amplitude : 0.0);

  std::ofstream os(out);
  if (!os) throw Error("cannot write " + out);
  write_study_header(os);
  const StudyResult s = convergence_study(
      m, sizes, eps, method == "newton" ? SolveMethod::newton : SolveMethod::flow,
      [&](const ConvergenceRow& r) {
        write_study_row(os, r);
        os.flush();
        std::cout << "n = " << r.n << ": err_max " << r.err_max << ", err_l2 " << r.err_l2 << ", "
                  << r.iterations << " iterations, " << r.runtime_ms << " ms\n";
      });
  os << "# fitted_order=" << std::setprecision(6) << s.fitted_order << '\n';
  std::cout << "wrote " << out << ": fitted order " << s.fitted_order << " (95% half width "
            << s.order_band << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"uniform circle packings on triangulated tori"};
  app.require_subcommand(1);

  int n = 8;
  double eps = 0.1, tol = 1e-10, amplitude = 0.05;
  std::string mesh, out, method = "newton", field = "default";
  std::vector<int> sizes;

  CLI::App* gen = app.add_subcommand("gen-hex", "generate a hexagonal torus mesh");
  gen->add_option("--n", n, "grid size (n x n vertices)")->required()->check(CLI::Range(3, 4096));
  gen->add_option("--out", out, "output mesh file")->required();

  CLI::App* fit = app.add_subcommand("fit-packing", "fit the uniform packing to edge lengths");
  fit->add_option("--mesh", mesh, "mesh file")->required();
  fit->add_option("--eps", eps, "regularity floor for the weight cosines");
  fit->add_option("--out", out, "output mesh file (default: in place)");

  CLI::App* chk = app.add_subcommand("check", "validate a mesh and report its invariants");
  chk->add_option("--mesh", mesh, "mesh file")->required();
  chk->add_option("--eps", eps, "regularity threshold");

  CLI::App* uni = app.add_subcommand("uniformize", "solve for the flat conformal factor");
  uni->add_option("--mesh", mesh, "mesh file with a packing")->required();
  uni->add_option("--tol", tol, "curvature sup-norm tolerance");
  uni->add_option("--method", method, "newton or flow")
      ->check(CLI::IsMember({"newton", "flow"}));
  uni->add_option("--out", out, "result file")->required();

  CLI::App* conv = app.add_subcommand("convergence", "mesh refinement study against a smooth model");
  conv->add_option("--field", field, "default, constant, or zero")
      ->check(CLI::IsMember({"default", "constant", "zero"}));
  conv->add_option("--amplitude", amplitude, "field amplitude (or the constant)");
  conv->add_option("--sizes", sizes, "comma-separated grid sizes")->required()->delimiter(',');
  conv->add_option("--eps", eps, "regularity floor");
  conv->add_option("--method", method, "newton or flow")
      ->check(CLI::IsMember({"newton", "flow"}));
  conv->add_option("--out", out, "CSV output file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return run_gen_hex(n, out);
    if (fit->parsed()) return run_fit_packing(mesh, eps, out);
    if (chk->parsed()) return run_check(mesh, eps);
    if (uni->parsed()) return run_uniformize(mesh, tol, method, out);
    if (conv->parsed()) return run_convergence(field, amplitude, sizes, eps, method, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
