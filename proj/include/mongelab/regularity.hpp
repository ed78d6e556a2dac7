#pragma once

#include "mongelab/sections.hpp"

#include <string>
#include <vector>

namespace mongelab {

class RegularityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// l(x) + P(x) with l(x) = u0 + p.(x - x0), P(x) = 1/2 (x - x0)^T H (x - x0).
struct QuadraticModel {
  Vec2 x0 = Vec2::Zero();
  double u0 = 0.0;
  Vec2 p = Vec2::Zero();
  Mat2 H = Mat2::Zero();
  bool unimodular = false;

  double gamma() const { return p.y(); }
  double operator()(const Vec2& x) const
  {
    Vec2 d = x - x0;
    return u0 + p.dot(d) + 0.5 * d.dot(H * d);
  }
  double det() const { return H.determinant(); }
  double norm() const { return H.jacobiSvd().singularValues()(0); }
  AffineFunction affine() const { return {u0 - p.dot(x0), p}; }
};

struct TangentPlane {
  AffineFunction l;
  Vec2 tangent = Vec2(1.0, 0.0);
  Vec2 normal = Vec2(0.0, 1.0);
  double u0 = 0.0;
  double tangential_slope = 0.0;
  double gamma = 0.0;               // normal slope used in l
  double gamma_richardson = 0.0;
  double gamma_error = 0.0;         // |R(2d,4d) - R(4d,8d)|
  double gamma_support = 0.0;       // largest supporting normal slope on the nodes
  double support_min = 0.0;         // min (u - l) over valued points
  bool snapped = false;             // gamma lowered to the supporting value
};

TangentPlane tangent_plane(const Field& u, const Vec2& x0);

// Inner normal and tangent of the domain at a boundary point.
void boundary_frame(const ConvexDomain& dom, const Vec2& x0, Vec2& tangent, Vec2& normal);

struct RescaledField {
  double h = 0.0;
  Slide2 A;
  Field field;
  std::shared_ptr<const ProblemSpec> spec;
  double k = 0.0, k_in = 0.0, k_out = 0.0;
  double sigma = 0.0;  // sup |f_h(x) - f_h(0)| / |x|^alpha over the new nodes
};

RescaledField rescale_section(const Field& u, const Vec2& x0, double h, double new_delta = 1.0 / 64.0);

enum class FitConstraint { Free, BoundaryMatched };

struct BoundaryExpansion {
  double phi0 = 0.0, slope = 0.0, phi2 = 0.0;  // phi = phi0 + slope s + phi2 s^2 / 2 + ...
  double kappa = 0.0;                          // boundary x_n = kappa s^2 / 2 + ...
};

BoundaryExpansion boundary_expansion(const Field& u, const Vec2& x0, double radius);

struct FitResult {
  QuadraticModel model;
  double residual = 0.0;
  int points = 0;
  int nodes = 0;
};

FitResult fit_quadratic(const Field& u, const Vec2& x0, double r, FitConstraint c = FitConstraint::Free);

struct ScaleFit {
  double r = 0.0;
  double R = 0.0;
  double gamma = 0.0;
  Mat2 H = Mat2::Zero();
  int nodes = 0;
};

struct RegularityReport {
  Vec2 x0 = Vec2::Zero();
  std::string constraint;
  std::vector<ScaleFit> scales;
  std::vector<double> gamma_drift, hessian_drift;
  double slope = 0.0;
  double alpha_est = 0.0;
  double C_est = 0.0;
  bool low_confidence = false;
  std::string notes;

  std::string to_text() const;
};

RegularityReport c2alpha_exponent(const Field& u, const Vec2& x0, const std::vector<double>& r_ladder,
                                  FitConstraint c = FitConstraint::Free);

std::vector<double> radius_ladder(double r0 = 0.5, int m_from = 1, int m_to = 8);

struct PogorelovStats {
  bool applicable = false;
  std::string message;
  double k = 0.0;
  int region_nodes = 0;
  double eig_min = 0.0, eig_max = 0.0;
  double functional_max = 0.0;
  Vec2 functional_argmax = Vec2::Zero();
  bool functional_interior = false;
  double functional_closed_form = 0.0;  // for u = |x|^2/2 at the argmax
  double c0 = 0.0;
  int third_nodes = 0;
  double third_max = 0.0;
};

// Checks the half-domain normalization, then Hessian statistics on {u < k^2/16}.
PogorelovStats pogorelov_region_bounds(const Field& u, double k, double c0 = -1.0, bool check_scenario = true);

// Discrete Hessian at an unknown from the width-1 second differences.
Mat2 discrete_hessian(const Field& u, int node);

struct DetPerturbation {
  bool applicable = false;
  bool holds = false;
  double lhs = 0.0;  // det(A + aI)
  double rhs = 0.0;  // det A + a/4
};

DetPerturbation det_perturbation_bound(const Mat2& A, double a);

}  // namespace mongelab
