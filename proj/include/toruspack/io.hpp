#pragma once

// JSON mesh files, solver result files, and the convergence study CSV.

#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "experiment.hpp"
#include "mesh.hpp"
#include "packing.hpp"
#include "uniformize.hpp"

namespace toruspack {

// Edge-keyed scalar, as stored in mesh files. Keys must be canonical (i < j).
using EdgeValues = std::vector<std::pair<EdgeKey, double>>;

struct MeshFile {
  int num_vertices = 0;
  std::vector<Tri> triangles;
  std::optional<std::vector<double>> rho;
  std::optional<EdgeValues> cos_theta;
  std::optional<EdgeValues> lengths;
  std::optional<std::vector<Vec2>> positions;
  std::optional<Lattice> lattice;
};

namespace detail {

inline EdgeValues parse_edge_values(const nlohmann::json& j, const char* what) {
  EdgeValues out;
  for (const auto& item : j) {
    if (!item.contains("edge") || !item.contains("value"))
      throw Error(std::string("mesh file: ") + what + " entries need edge and value");
    const auto& e = item.at("edge");
    if (!e.is_array() || e.size() != 2)
      throw Error(std::string("mesh file: ") + what + " edge keys must be pairs");
    const int a = e.at(0).get<int>();
    const int b = e.at(1).get<int>();
    if (a >= b)
      throw Error(std::string("mesh file: ") + what + " edge key {" + std::to_string(a) + "," +
                  std::to_string(b) + "} is not canonical (need i<j)");
    out.push_back({{a, b}, item.at("value").get<double>()});
  }
  return out;
}

inline nlohmann::json dump_edge_values(const EdgeValues& values) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& [key, value] : values)
    j.push_back({{"edge", {key[0], key[1]}}, {"value", value}});
  return j;
}

}  // namespace detail

inline MeshFile load_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("cannot parse " + path + ": " + e.what());
  }

  if (!j.contains("version") || j.at("version").get<int>() != 1)
    throw Error("mesh file: missing or unsupported version (need 1)");
  if (!j.contains("num_vertices") || !j.contains("triangles"))
    throw Error("mesh file: num_vertices and triangles are required");

  MeshFile f;
  f.num_vertices = j.at("num_vertices").get<int>();
  for (const auto& face : j.at("triangles")) {
    if (!face.is_array() || face.size() != 3)
      throw Error("mesh file: triangles must be vertex triples");
    f.triangles.push_back({face.at(0).get<int>(), face.at(1).get<int>(), face.at(2).get<int>()});
  }
  if (j.contains("rho")) f.rho = j.at("rho").get<std::vector<double>>();
  if (j.contains("cos_theta")) f.cos_theta = detail::parse_edge_values(j.at("cos_theta"), "cos_theta");
  if (j.contains("lengths")) f.lengths = detail::parse_edge_values(j.at("lengths"), "lengths");
  if (j.contains("positions")) {
    std::vector<Vec2> pos;
    for (const auto& p : j.at("positions")) {
      if (!p.is_array() || p.size() != 2) throw Error("mesh file: positions must be pairs");
      pos.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    }
    f.positions = std::move(pos);
  }
  if (j.contains("lattice")) {
    const auto& l = j.at("lattice");
    if (!l.is_array() || l.size() != 2 || !l.at(0).is_array() || l.at(0).size() != 2 ||
        !l.at(1).is_array() || l.at(1).size() != 2)
      throw Error("mesh file: lattice must be two basis vectors");
    f.lattice = Lattice{{l.at(0).at(0).get<double>(), l.at(0).at(1).get<double>()},
                        {l.at(1).at(0).get<double>(), l.at(1).at(1).get<double>()}};
  }
  return f;
}

inline void save_mesh_file(const std::string& path, const MeshFile& f) {
  nlohmann::json j;
  j["version"] = 1;
  j["num_vertices"] = f.num_vertices;
  j["triangles"] = nlohmann::json::array();
  for (const Tri& t : f.triangles) j["triangles"].push_back({t[0], t[1], t[2]});
  if (f.rho) j["rho"] = *f.rho;
  if (f.cos_theta) j["cos_theta"] = detail::dump_edge_values(*f.cos_theta);
  if (f.lengths) j["lengths"] = detail::dump_edge_values(*f.lengths);
  if (f.positions) {
    j["positions"] = nlohmann::json::array();
    for (const Vec2& p : *f.positions) j["positions"].push_back({p.x, p.y});
  }
  if (f.lattice)
    j["lattice"] = {{f.lattice->a.x, f.lattice->a.y}, {f.lattice->b.x, f.lattice->b.y}};

  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << j.dump(2) << '\n';
}

// Maps file edge values onto the canonical edge order of a triangulation.
// Every edge must be covered exactly once.
inline std::vector<double> edge_values_to_vector(const Triangulation& t, const EdgeValues& values,
                                                 const char* what) {
  std::vector<double> out(t.edges.size());
  std::vector<char> seen(t.edges.size(), 0);
  for (const auto& [key, value] : values) {
    const int e = t.edge_index(key[0], key[1]);
    if (e < 0)
      throw Error(std::string(what) + ": edge {" + std::to_string(key[0]) + "," +
                  std::to_string(key[1]) + "} is not in the triangulation");
    if (seen[e])
      throw Error(std::string(what) + ": duplicate edge {" + std::to_string(key[0]) + "," +
                  std::to_string(key[1]) + "}");
    seen[e] = 1;
    out[e] = value;
  }
  for (std::size_t e = 0; e < seen.size(); ++e)
    if (!seen[e])
      throw Error(std::string(what) + ": edge {" + std::to_string(t.edges[e][0]) + "," +
                  std::to_string(t.edges[e][1]) + "} is missing");
  return out;
}

inline EdgeValues edge_vector_to_values(const Triangulation& t, const std::vector<double>& v) {
  if (v.size() != t.edges.size())
    throw std::invalid_argument("edge_vector_to_values: size mismatch");
  EdgeValues out;
  out.reserve(v.size());
  for (std::size_t e = 0; e < v.size(); ++e) out.push_back({t.edges[e], v[e]});
  return out;
}

inline void save_solve_result(const std::string& path, const std::string& method,
                              const ConformalFactor& u, const Curvature& k,
                              const SolveReport& report) {
  nlohmann::json j;
  j["method"] = method;
  j["u"] = u;
  j["curvature"] = k;
  j["area_shift"] = report.area_shift;
  j["iterations"] = report.iterations;
  j["final_residual"] = report.final_residual;
  j["step_history"] = nlohmann::json::array();
  for (const auto& [a, b] : report.step_history) j["step_history"].push_back({a, b});

  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << j.dump(2) << '\n';
}

inline void write_study_header(std::ostream& os) {
  os << "n,l_max,err_max,err_l2,iterations,runtime_ms\n";
}

inline void write_study_row(std::ostream& os, const ConvergenceRow& r) {
  os << r.n << ',' << std::setprecision(12) << r.l_max << ',' << r.err_max << ',' << r.err_l2
     << ',' << r.iterations << ',' << std::setprecision(6) << r.runtime_ms << '\n';
}

inline void write_study_csv(std::ostream& os, const StudyResult& s) {
  write_study_header(os);
  for (const ConvergenceRow& r : s.rows) write_study_row(os, r);
  os << "# fitted_order=" << std::setprecision(6) << s.fitted_order << '\n';
}

}  // namespace toruspack
