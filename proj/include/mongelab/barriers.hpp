#pragma once

#include "mongelab/regularity.hpp"

#include <limits>
#include <map>
#include <string>
#include <vector>

namespace mongelab {

class BarrierError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class BarrierKind { TwLowerV, TwUpperW, PogorelovW, PogorelovMixedV, RadialPhi, PhiY };
enum class BarrierSide { Lower, Upper };

const char* to_string(BarrierKind k);
BarrierKind barrier_kind(const std::string& name);

// Closed-form comparison function
//   b(x) = shift + affine(x) + 1/2 (x - c)^T H (x - c) + lin (x - c)_n + scale * phi(x - y)
// with phi(z) = c_beta (4^beta - |z|^-beta) the radial term. The mixed
// Pogorelov barrier additionally subtracts gamma1 (u - l) and is compared
// with a tangential derivative of u instead of u.
struct Barrier {
  BarrierKind kind = BarrierKind::TwLowerV;
  BarrierSide side = BarrierSide::Lower;
  std::map<std::string, double> params;

  Vec2 center = Vec2::Zero();
  Mat2 H = Mat2::Zero();
  double lin = 0.0;
  AffineFunction affine;
  double shift = 0.0;

  double beta = 0.0, c_beta = 0.0, scale = 0.0;
  Vec2 y = Vec2::Zero();
  double r_in = 0.0, r_out = 0.0;  // validity annulus of the radial term

  double gamma1 = 0.0;    // mixed barrier weight on -(u - l)
  AffineFunction l_ref;   // supporting plane subtracted in the mixed barrier
  int component = 0;      // derivative compared with the mixed barrier

  bool anchored = false;  // touches u at `anchor` by construction
  Vec2 anchor = Vec2::Zero();

  bool has_radial() const { return scale != 0.0; }

  // Value without the -gamma1 (u - l) term of the mixed barrier.
  double operator()(const Vec2& x) const;
  Mat2 hessian(const Vec2& x) const;
  // Closed-form det D^2 b; for the mixed barrier the determinant of its quadratic part.
  double det(const Vec2& x) const;
  bool valid_at(const Vec2& x) const;
  Barrier lowered(double eps) const;
};

Barrier barrier_catalog(const std::string& name, const std::map<std::string, double>& params);

// Radial profile phi(z) = c (4^beta - |z|^-beta), phi = 0 on |z| = 1/4, 1 on |z| = 1/2.
double radial_c(double beta);
// Hessian eigenvalues at radius r: radial (negative) and tangential (positive).
Vec2 radial_eigenvalues(double beta, double r);

struct RadialTrace {
  double beta = 0.0;
  double eta0 = 0.0;        // -max Tr(A D^2 phi) over admissible A and r in [1/4, 1/2]
  double a_min = 0.0, a_max = 0.0;
  double worst_trace = 0.0; // max over the eigenvalue-extreme A and sampled radii
};

// Trace bound for A with (2 C0)^-1 I <= A <= 2 C0 I (planar case).
RadialTrace radial_trace(double beta, double C0);
// beta maximizing eta0 by golden-section search.
RadialTrace choose_beta(double C0);

struct FdCheck {
  int samples = 0;
  double max_rel_error = 0.0;
  Vec2 worst = Vec2::Zero();
  bool pass(double tol = 1e-6) const { return samples > 0 && max_rel_error <= tol; }
};

// Closed-form determinant against finite differences at random points in the box.
FdCheck fd_determinant_check(const Barrier& b, const Vec2& lo, const Vec2& hi, int samples = 100,
                             unsigned seed = 7);

// Conjunction of optional constraints on (x, u(x)).
struct CertRegion {
  std::string name = "domain";
  double max_xn = std::numeric_limits<double>::infinity();
  double sublevel = std::numeric_limits<double>::infinity();  // u - l < sublevel
  AffineFunction l;
  Vec2 annulus_center = Vec2::Zero();
  double annulus_in = 0.0, annulus_out = std::numeric_limits<double>::infinity();

  bool contains(const Vec2& x, double u) const;
};

struct Certificate {
  std::string name;
  std::string side;
  std::map<std::string, double> params;
  std::string region;
  std::string verdict = "inapplicable";  // certified | violated | inapplicable
  std::string message;
  double boundary_margin = 0.0;     // min over the discrete region boundary of the domination gap
  double anchor_gap = 0.0;          // gap at the touching point, excluded from boundary_margin
  double det_margin = 0.0;          // analytic determinant margin against f
  double discrete_margin = 0.0;     // margin of MA_h[b] against f at region nodes
  double interior_violation = 0.0;  // max violation of the comparison inside
  double tolerance = 0.0;           // allowed interior violation
  int region_nodes = 0;
  int boundary_nodes = 0;
  Vec2 worst_boundary = Vec2::Zero();

  bool certified() const { return verdict == "certified"; }
  std::string to_json() const;
};

// Discrete comparison of a barrier with u on a region of the grid. Lower
// barriers certify b <= u, upper barriers u <= b; the mixed barrier certifies
// b <= D_i u under the linearized operator.
Certificate certify_lower_bound(const Barrier& b, const Field& u, const CertRegion& region);

struct ConstantSearch {
  std::string param;
  double threshold = 0.0;  // boundary domination limit found by bisection
  double value = 0.0;      // final value with 10% margin
  Barrier barrier;
  Certificate certificate;
};

// Smallest (larger_is_safer) or largest value of `param` passing boundary
// domination, then moved 10% further into the safe side and certified.
ConstantSearch search_constant(const std::string& name, std::map<std::string, double> params,
                               const std::string& param, bool larger_is_safer, double lo, double hi,
                               const Field& u, const CertRegion& region);

struct SlopeInterval {
  double lo = 0.0, hi = 0.0;
  double gamma = 0.0;       // tangent_plane normal slope
  double delta = 0.0;       // pogorelov-w constant used
  double k = 0.0;
  Certificate certificate;
  bool contains(double g) const { return lo <= g && g <= hi; }
};

// Normal-slope interval at a flat boundary point from the pogorelov-w barrier
// (lower end) and convexity along the inner normal (upper end).
SlopeInterval slope_bound_from_barrier(const Field& u, const Vec2& x0, double k);

// Tangential derivative D_i u at a lattice node carrying a value; NaN when the
// stencil is incomplete.
double lattice_derivative(const Field& u, int lat, int component);

}  // namespace mongelab
