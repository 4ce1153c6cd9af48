#pragma once

// Triangulated tori: construction and validation of the combinatorics,
// the regular hexagonal generator, and flat-torus vertex embeddings.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "graph.hpp"

namespace toruspack {

using Tri = std::array<int, 3>;

struct Triangulation {
  int num_vertices = 0;
  std::vector<Tri> triangles;
  std::vector<EdgeKey> edges;                  // canonical (min,max), sorted
  std::vector<std::array<int, 2>> edge_faces;  // the two faces at each edge
  std::vector<std::array<int, 3>> face_edges;  // per face, slot c = edge opposite corner c
  std::vector<int> vertex_degrees;

  int num_edges() const { return static_cast<int>(edges.size()); }
  int num_faces() const { return static_cast<int>(triangles.size()); }
  int euler_characteristic() const { return num_vertices - num_edges() + num_faces(); }

  // Id of the canonical edge {i,j}, or -1 when absent.
  int edge_index(int i, int j) const {
    const EdgeKey k{std::min(i, j), std::max(i, j)};
    auto it = std::lower_bound(edges.begin(), edges.end(), k);
    if (it == edges.end() || *it != k) return -1;
    return static_cast<int>(it - edges.begin());
  }

  Graph skeleton() const { return Graph{num_vertices, edges}; }
};

namespace detail {

inline void check_face_list(const std::vector<Tri>& triangles, int num_vertices) {
  if (num_vertices <= 0) throw std::invalid_argument("triangulation: no vertices");
  for (std::size_t f = 0; f < triangles.size(); ++f) {
    const Tri& t = triangles[f];
    for (int v : t)
      if (v < 0 || v >= num_vertices)
        throw std::invalid_argument("triangulation: face " + std::to_string(f) +
                                    " references vertex " + std::to_string(v));
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
      throw std::invalid_argument("triangulation: face " + std::to_string(f) +
                                  " has a repeated vertex");
  }
}

// Edge -> incident faces, in sorted canonical edge order.
inline std::map<EdgeKey, std::vector<int>> collect_edges(const std::vector<Tri>& triangles) {
  std::map<EdgeKey, std::vector<int>> incident;
  for (std::size_t f = 0; f < triangles.size(); ++f) {
    const Tri& t = triangles[f];
    for (int c = 0; c < 3; ++c) {
      const int a = t[(c + 1) % 3];
      const int b = t[(c + 2) % 3];
      incident[{std::min(a, b), std::max(a, b)}].push_back(static_cast<int>(f));
    }
  }
  return incident;
}

inline bool edges_connected(int num_vertices, const std::vector<EdgeKey>& edges) {
  return is_connected(Graph{num_vertices, edges});
}

}  // namespace detail

inline Triangulation build_triangulation(const std::vector<Tri>& triangles, int num_vertices) {
  detail::check_face_list(triangles, num_vertices);
  auto incident = detail::collect_edges(triangles);
  for (const auto& [key, faces] : incident)
    if (faces.size() != 2)
      throw NonManifoldEdge("edge {" + std::to_string(key[0]) + "," + std::to_string(key[1]) +
                            "} lies in " + std::to_string(faces.size()) + " faces");

  Triangulation t;
  t.num_vertices = num_vertices;
  t.triangles = triangles;
  t.edges.reserve(incident.size());
  t.edge_faces.reserve(incident.size());
  for (const auto& [key, faces] : incident) {
    t.edges.push_back(key);
    t.edge_faces.push_back({faces[0], faces[1]});
  }

  if (t.euler_characteristic() != 0)
    throw NotTorus("Euler characteristic is " + std::to_string(t.euler_characteristic()) +
                   ", not 0");
  if (!detail::edges_connected(num_vertices, t.edges))
    throw Disconnected("triangulation is not connected");

  t.face_edges.resize(t.triangles.size());
  for (std::size_t f = 0; f < t.triangles.size(); ++f)
    for (int c = 0; c < 3; ++c)
      t.face_edges[f][c] = t.edge_index(t.triangles[f][(c + 1) % 3], t.triangles[f][(c + 2) % 3]);

  t.vertex_degrees.assign(num_vertices, 0);
  for (const EdgeKey& e : t.edges) {
    ++t.vertex_degrees[e[0]];
    ++t.vertex_degrees[e[1]];
  }
  return t;
}

// Non-throwing structural report on a raw face list.
struct MeshReport {
  int num_vertices = 0;
  int num_edges = 0;
  int num_faces = 0;
  int euler_characteristic = 0;
  int min_degree = 0;
  int max_degree = 0;
  std::map<int, int> degree_histogram;
  bool manifold_edges = false;
  bool connected = false;
  bool valid = false;  // all torus invariants hold
  std::vector<std::string> violations;
};

inline MeshReport validate(const std::vector<Tri>& triangles, int num_vertices) {
  MeshReport r;
  r.num_vertices = num_vertices;
  r.num_faces = static_cast<int>(triangles.size());
  try {
    detail::check_face_list(triangles, num_vertices);
  } catch (const std::invalid_argument& e) {
    r.violations.push_back(e.what());
    return r;
  }

  auto incident = detail::collect_edges(triangles);
  r.num_edges = static_cast<int>(incident.size());
  r.euler_characteristic = r.num_vertices - r.num_edges + r.num_faces;

  r.manifold_edges = true;
  for (const auto& [key, faces] : incident)
    if (faces.size() != 2) {
      r.manifold_edges = false;
      r.violations.push_back("NonManifoldEdge {" + std::to_string(key[0]) + "," +
                             std::to_string(key[1]) + "}: " + std::to_string(faces.size()) +
                             " faces");
    }
  if (r.euler_characteristic != 0)
    r.violations.push_back("NotTorus: Euler characteristic " +
                           std::to_string(r.euler_characteristic));

  std::vector<EdgeKey> edges;
  edges.reserve(incident.size());
  for (const auto& [key, faces] : incident) edges.push_back(key);
  r.connected = detail::edges_connected(num_vertices, edges);
  if (!r.connected) r.violations.push_back("Disconnected");

  std::vector<int> degree(num_vertices, 0);
  for (const EdgeKey& e : edges) {
    ++degree[e[0]];
    ++degree[e[1]];
  }
  r.min_degree = num_vertices > 0 ? *std::min_element(degree.begin(), degree.end()) : 0;
  r.max_degree = num_vertices > 0 ? *std::max_element(degree.begin(), degree.end()) : 0;
  for (int d : degree) ++r.degree_histogram[d];

  r.valid = r.manifold_edges && r.connected && r.euler_characteristic == 0;
  return r;
}

inline MeshReport validate(const Triangulation& t) { return validate(t.triangles, t.num_vertices); }

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }

// Plane lattice spanned by two basis vectors; fundamental domain has area det.
struct Lattice {
  Vec2 a{1.0, 0.0};
  Vec2 b{0.0, 1.0};

  double det() const { return a.x * b.y - a.y * b.x; }
  Vec2 to_cartesian(double fa, double fb) const { return fa * a + fb * b; }
  Vec2 to_fractional(Vec2 p) const {
    const double d = det();
    return {(p.x * b.y - p.y * b.x) / d, (p.y * a.x - p.x * a.y) / d};
  }
};

struct VertexEmbedding {
  std::vector<Vec2> positions;  // inside the half-open fundamental parallelogram
  Lattice lattice;              // scaled so det == 1
};

// Shortest representative of d modulo the lattice. When two images tie in
// length within 1e-12, the lexicographically smallest displacement (by x,
// then y) is returned, so downstream geometry is deterministic.
inline Vec2 minimal_image(const Lattice& lattice, Vec2 d) {
  Vec2 f = lattice.to_fractional(d);
  f.x -= std::round(f.x);
  f.y -= std::round(f.y);
  const Vec2 base = lattice.to_cartesian(f.x, f.y);
  Vec2 best = base;
  double best_len = norm(base);
  for (int s = -1; s <= 1; ++s)
    for (int t = -1; t <= 1; ++t) {
      if (s == 0 && t == 0) continue;
      const Vec2 c = base + static_cast<double>(s) * lattice.a + static_cast<double>(t) * lattice.b;
      const double len = norm(c);
      if (len < best_len - 1e-12) {
        best = c;
        best_len = len;
      } else if (len <= best_len + 1e-12) {
        if (c.x < best.x || (c.x == best.x && c.y < best.y)) {
          best = c;
          best_len = std::min(best_len, len);
        }
      }
    }
  return best;
}

// Unit-area lattice of the regular hexagonal torus.
inline Lattice hexagonal_lattice() {
  const double c = std::sqrt(2.0 / std::sqrt(3.0));
  return Lattice{{c, 0.0}, {0.5 * c, 0.5 * std::sqrt(3.0) * c}};
}

// n x n triangulated hexagonal torus with unit total area: n^2 vertices of
// degree six, every face positively oriented in the flat embedding.
inline std::pair<Triangulation, VertexEmbedding> hex_torus(int n) {
  if (n < 3)
    throw std::invalid_argument("hex_torus: n must be at least 3, got " + std::to_string(n));
  const auto vid = [n](int i, int j) { return (i % n) + n * (j % n); };

  std::vector<Tri> faces;
  faces.reserve(2 * static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      faces.push_back({vid(i, j), vid(i + 1, j), vid(i, j + 1)});
      faces.push_back({vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)});
    }

  VertexEmbedding emb;
  emb.lattice = hexagonal_lattice();
  emb.positions.resize(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      emb.positions[vid(i, j)] =
          emb.lattice.to_cartesian(static_cast<double>(i) / n, static_cast<double>(j) / n);

  return {build_triangulation(faces, n * n), std::move(emb)};
}

}  // namespace toruspack
