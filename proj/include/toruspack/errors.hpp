#pragma once

#include <stdexcept>
#include <string>

namespace toruspack {

// Base class for every structured failure raised by this library.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// An edge of the face list is contained in a number of faces other than two.
struct NonManifoldEdge : Error {
  explicit NonManifoldEdge(const std::string& what) : Error(what) {}
};

// The surface closes up but its Euler characteristic is not zero.
struct NotTorus : Error {
  explicit NotTorus(const std::string& what) : Error(what) {}
};

// The triangulation (or graph) has more than one connected component.
struct Disconnected : Error {
  explicit Disconnected(const std::string& what) : Error(what) {}
};

// A face violates the triangle inequality, or an angle computation hit an
// out-of-range cosine beyond rounding slack.
struct DegenerateFace : Error {
  explicit DegenerateFace(const std::string& what) : Error(what) {}
};

// No uniform packing with all weights cos-bounded below by eps induces the
// given edge lengths.
struct NotUniformlyPackable : Error {
  explicit NotUniformlyPackable(const std::string& what) : Error(what) {}
};

// The right-hand side of a Laplacian solve has a nonzero mean beyond slack.
struct NotMeanZero : Error {
  explicit NotMeanZero(const std::string& what) : Error(what) {}
};

// An iterative method exhausted its iteration budget.
struct NoConvergence : Error {
  explicit NoConvergence(const std::string& what) : Error(what) {}
};

// A brute-force computation was asked for on an input above its size gate.
struct TooLarge : Error {
  explicit TooLarge(const std::string& what) : Error(what) {}
};

// A solver line search or flow stage could not stay inside the region where
// every face satisfies the triangle inequality.
struct LostAdmissibility : Error {
  explicit LostAdmissibility(const std::string& what) : Error(what) {}
};

// A constructed mesh failed the requested regularity bounds.
struct RegularityFailure : Error {
  explicit RegularityFailure(const std::string& what) : Error(what) {}
};

}  // namespace toruspack
