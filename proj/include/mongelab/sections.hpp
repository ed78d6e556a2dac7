#pragma once

#include "mongelab/ellipsoid.hpp"
#include "mongelab/solver.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mongelab {

class SectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Slide2 = SlidingMap<2>;
using Ellipse = Ellipsoid<2>;

// Sublevel set {u < l + h} as a point cloud with its hull.
struct Section {
  double h = 0.0;
  Vec2 x0 = Vec2::Zero();
  AffineFunction l;
  std::vector<Vec2> cloud;
  std::vector<Vec2> hull;  // counter-clockwise
  double area = 0.0;
  Vec2 centroid = Vec2::Zero();
  int lattice_nodes = 0;   // grid nodes inside (interior + on-grid boundary)
  double delta = 0.0;

  bool resolved(int floor = 50) const { return lattice_nodes >= floor; }
  double max_height() const;  // max (x - x0)_n over the hull
  double diameter() const;
};

Section section(const Field& u, const Vec2& x0, double h, const AffineFunction& l);

std::pair<Slide2, Section> center_of_mass_slide(const Section& S);

// Section mapped by a sliding map (hull and cloud transformed).
Section slide_section(const Section& S, const Slide2& A);

Ellipse john_ellipsoid(const Section& S);
Ellipse john_ellipsoid(const std::vector<Vec2>& hull);

double b_value(const Field& u, const Vec2& x0, double h, const AffineFunction& l);
double b_value(const Field& u, const Vec2& x0, double h);
double b_value(const Section& S);

struct Localization {
  double h = 0.0;
  double k_in = 0.0;
  double k_out = 0.0;
  Vec2 nu = Vec2::Zero();
  Ellipse E_h;       // centered at x0, volume h^{n/2}
  Ellipse john;      // inscribed ellipse of the slid section
  double area = 0.0;
  double b = 0.0;
  int lattice_nodes = 0;
};

// Largest k <= kmax (to 1e-3) with kE intersected with the domain inside the hull.
double inner_inclusion_constant(const Ellipse& E, const std::vector<Vec2>& hull, const ConvexDomain& dom,
                                double kmax);

Localization localization_constants(const Field& u, const Vec2& x0, double h, const AffineFunction& l);
Localization localization_constants(const Field& u, const Vec2& x0, double h);
Localization localization_constants(const Section& S, const ConvexDomain& dom);

struct BProfileEntry {
  double h = 0.0;
  double area = 0.0;
  double b = 0.0;
  Vec2 nu = Vec2::Zero();
  double k_in = 0.0;
  double k_out = 0.0;
  Vec2 semi_axes = Vec2::Zero();  // of E_h, ascending
  int lattice_nodes = 0;
};

struct BProfile {
  std::vector<BProfileEntry> entries;
  std::vector<double> skipped;  // ladder levels under the resolution floor
  std::string to_csv() const;
  double min_k_in() const;
  double max_nu_over_log_h() const;
};

// Default dyadic ladder 2^-2 ... 2^-12.
std::vector<double> dyadic_ladder(int from = 2, int to = 12);

BProfile b_profile(const Field& u, const Vec2& x0, const std::vector<double>& ladder, const AffineFunction& l,
                   int resolution_floor = 50);

struct BRatioCheck {
  double worst_low = 0.0;   // max over pairs of (lower bound - ratio) / lower bound
  double worst_high = 0.0;  // max over pairs of (ratio - upper bound) / upper bound
  bool pass(double tol = 0.02) const { return worst_low <= tol && worst_high <= tol; }
};

BRatioCheck b_ratio_bounds(const BProfile& p);

struct VolumeScan {
  std::vector<double> h, area;
  double slope = 0.0;
  double ratio_min = 0.0, ratio_max = 0.0;
};

VolumeScan volume_scaling_scan(const Field& u, const Vec2& x0, const std::vector<double>& ladder,
                               const AffineFunction& l, int resolution_floor = 50);
VolumeScan volume_scaling_scan(const BProfile& p);

struct DoublingReport {
  double c0 = 0.0;
  bool vacuous = true;
  std::vector<double> h;          // levels with b(h) <= c0
  std::vector<double> max_ratio;  // max over admissible t of b(th)/b(h)
  std::vector<char> doubled;
  double aggregate = 0.0;         // min over h of max_ratio
  // property-1 envelope: min/max of ratio / bound over all pairs
  double envelope_low = 0.0, envelope_high = 0.0;
};

DoublingReport doubling_scan(const BProfile& p, double c0);

// u o A^-1 sampled on a grid of spacing delta over A(Omega).
Field slide_field(const Field& u, const Slide2& A, double delta);

}  // namespace mongelab
