#pragma once

#include "mongelab/geometry.hpp"

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mongelab {

class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Convex planar domain stored as a closed counter-clockwise chain of boundary
// samples. After normalization the anchor sample is the origin and the inner
// normal there is e_2.
struct ConvexDomain {
  int dimension = 2;
  std::vector<Vec2> boundary;
  std::size_t anchor = 0;
  double rho_in = 0.0;   // largest c with B_c(c e_n) inside
  double r_out = 0.0;    // max |x| over the boundary
  double rho = 0.0;      // min(rho_in, 1/r_out)

  std::size_t size() const { return boundary.size(); }
  const Vec2& vertex(std::size_t i) const { return boundary[i % boundary.size()]; }

  bool contains(const Vec2& p, double tol = 0.0) const;
  double distance_to_boundary(const Vec2& p) const;
  double perimeter() const;
  double area() const;
  double diameter() const;
  void bounding_box(Vec2& lo, Vec2& hi) const;

  struct Hit {
    std::size_t segment = 0;  // chain segment [segment, segment+1]
    double s = 0.0;           // position on the segment
    double t = 0.0;           // ray parameter
    Vec2 point;
  };
  // Exit point of the ray p + t d, t > 0, for p inside.
  Hit ray_exit(const Vec2& p, const Vec2& d) const;
  // Nearest boundary location of p.
  Hit nearest(const Vec2& p) const;
};

struct DomainDescription {
  enum class Kind { HalfDisk, Disk, Polygon, Sublevel };
  Kind kind = Kind::HalfDisk;
  double radius = 1.0;
  std::vector<Vec2> vertices;          // Polygon
  std::optional<Vec2> anchor;          // Polygon: boundary point to normalize at
  std::function<double(const Vec2&)> g;  // Sublevel: {g <= 1}, convex
  Vec2 interior_point = Vec2::Zero();  // Sublevel: a point with g < 1
  std::size_t samples = 512;
};

ConvexDomain make_domain(const DomainDescription& desc);

// Re-run the normalization on an existing chain (translate anchor to origin,
// rotate inner normal to e_n, recompute radii).
ConvexDomain normalize_domain(ConvexDomain d);

// Chain with no further resampling; checks convexity and computes radii.
ConvexDomain domain_from_chain(std::vector<Vec2> chain, std::size_t anchor);

// Values on the boundary samples. Infinite entries are replaced by a finite
// sentinel and remembered in `infinite`.
struct BoundaryFunction {
  std::vector<double> values;
  std::vector<char> infinite;
  double sentinel = 0.0;
  bool lower_semicontinuous = true;

  double at(std::size_t seg, double s, std::size_t n) const
  {
    return (1.0 - s) * values[seg % n] + s * values[(seg + 1) % n];
  }
};

BoundaryFunction sample_boundary_function(const ConvexDomain& dom,
                                          const std::function<double(const Vec2&)>& phi);

bool check_lower_semicontinuous(const std::vector<double>& v);

BoundaryFunction convex_envelope(const BoundaryFunction& phi, const ConvexDomain& dom);

using ScalarField = std::function<double(const Vec2&)>;

struct ProblemSpec {
  ConvexDomain domain;
  BoundaryFunction phi;  // envelope already applied
  ScalarField f;
  double lambda = 1.0;
  double Lambda = 1.0;
  double alpha = 0.5;
  double M = 0.0;
  Vec2 x0 = Vec2::Zero();

  double phi_at(const ConvexDomain::Hit& h) const { return phi.at(h.segment, h.s, domain.size()); }
  void validate() const;
};

ProblemSpec make_problem(ConvexDomain dom, const ScalarField& phi, ScalarField f, double lambda,
                         double Lambda, double alpha = 0.5, double M = 0.0);

struct AffineFunction {
  double c = 0.0;
  Vec2 p = Vec2::Zero();
  double operator()(const Vec2& x) const { return c + p.dot(x); }
};

struct SeparationResult {
  double mu_lo = 0.0;
  double mu_hi = 0.0;
  double decay_exponent = 0.0;  // d log(ratio) / d log|x| near x0 for the lower ratio
  std::size_t samples = 0;
  Vec2 argmin = Vec2::Zero();
  bool success = false;
  std::string message;
};

SeparationResult quadratic_separation(const ProblemSpec& spec, const AffineFunction& tangent);

struct HypothesisVerdict {
  int hypothesis_case = 0;
  bool satisfied = false;
  double modulus = 0.0;  // measured convexity / growth modulus
  std::string diagnostics;
};

HypothesisVerdict check_hypothesis_case(const ProblemSpec& spec, int which);

}  // namespace mongelab
