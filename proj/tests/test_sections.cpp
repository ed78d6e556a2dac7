#include "doctest.h"

#include "mongelab/sections.hpp"

#include <cmath>
#include <numbers>

using namespace mongelab;

namespace {

const ScalarField one = [](const Vec2&) { return 1.0; };

ConvexDomain half_disk(double R = 1.0, std::size_t n = 2048)
{
  DomainDescription d;
  d.kind = DomainDescription::Kind::HalfDisk;
  d.radius = R;
  d.samples = n;
  return make_domain(d);
}

// Exact oracle values on the grid nodes (no solve), so sections are those of the closed form.
Field oracle_field(const OracleTriple& o, double delta = 1.0 / 128.0, ConvexDomain dom = half_disk())
{
  auto spec = std::make_shared<const ProblemSpec>(make_problem(std::move(dom), o.phi, o.f, 1.0, 1.0));
  return Field::from_function(discretize(spec, delta, 2), o.u);
}

OracleTriple anisotropic(double a)
{
  OracleParams P;
  P.a = a;
  return exact_oracle("anisotropic", P);
}

OracleTriple slid(double nu)
{
  OracleParams P;
  P.nu = Vec2(nu, 0.0);
  return exact_oracle("slid", P);
}

double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b)
{
  const Vec2 e = b - a;
  const double t = std::clamp((p - a).dot(e) / e.squaredNorm(), 0.0, 1.0);
  return (a + t * e - p).norm();
}

double polygon_distance(const Vec2& p, const std::vector<Vec2>& poly)
{
  double d = 1e300;
  for (std::size_t i = 0; i < poly.size(); ++i) d = std::min(d, segment_distance(p, poly[i], poly[(i + 1) % poly.size()]));
  return d;
}

double hausdorff(const std::vector<Vec2>& P, const std::vector<Vec2>& Q)
{
  double d = 0.0;
  for (const auto& p : P) d = std::max(d, polygon_distance(p, Q));
  for (const auto& q : Q) d = std::max(d, polygon_distance(q, P));
  return d;
}

// Boundary of {|M^-1 x| <= r, x_2 >= 0} as a dense polygon.
std::vector<Vec2> mapped_half_disk(const Mat2& M, double r, int n = 2000)
{
  std::vector<Vec2> poly;
  for (int i = 0; i <= n; ++i) {
    const double t = std::numbers::pi * i / n;
    poly.push_back(M * Vec2(r * std::cos(t), r * std::sin(t)));
  }
  return poly;
}

std::vector<Vec2> ellipse_polygon(double a, double b, int n)
{
  std::vector<Vec2> poly;
  for (int i = 0; i < n; ++i) {
    const double t = 2 * std::numbers::pi * i / n;
    poly.push_back(Vec2(a * std::cos(t), b * std::sin(t)));
  }
  return poly;
}

// Largest axis-aligned ellipse inside the half-disk of radius r, by grid search
// over its height c = b and the largest admissible horizontal semi-axis.
double half_disk_mvie_area_oracle(double r)
{
  double best = 0.0;
  for (int ib = 1; ib < 400; ++ib) {
    const double b = 0.5 * r * ib / 400.0;
    double lo = 0.0, hi = r;
    for (int it = 0; it < 60; ++it) {
      const double a = 0.5 * (lo + hi);
      bool inside = true;
      for (int k = 0; k < 720 && inside; ++k) {
        const double t = 2 * std::numbers::pi * k / 720;
        inside = Vec2(a * std::cos(t), b + b * std::sin(t)).norm() <= r;
      }
      (inside ? lo : hi) = a;
    }
    best = std::max(best, std::numbers::pi * lo * b);
  }
  return best;
}

void check_sandwich(const Ellipse& E, const std::vector<Vec2>& hull)
{
  // E inside the hull: boundary samples of E satisfy every facet
  for (int k = 0; k < 360; ++k) {
    const double t = 2 * std::numbers::pi * k / 360;
    const Vec2 p = E.boundary_point(Vec2(std::cos(t), std::sin(t)));
    for (std::size_t i = 0; i < hull.size(); ++i) {
      const Vec2 a = hull[i], b = hull[(i + 1) % hull.size()];
      const Vec2 e = b - a;
      CHECK(e.x() * (p - a).y() - e.y() * (p - a).x() >= -1e-6 * e.norm());
    }
  }
  // hull inside 2(E - c) + c
  for (const auto& v : hull) CHECK(E.scaled(2.0).contains(v, 1e-9));
}

}  // namespace

TEST_CASE("isotropic section at the origin is the half-disk of radius sqrt(2h)")
{
  const Field u = oracle_field(exact_oracle("isotropic"));
  for (double h : {1.0 / 16.0, 1.0 / 64.0}) {
    const Section S = section(u, Vec2::Zero(), h, AffineFunction{});
    CHECK(S.area == doctest::Approx(std::numbers::pi * h).epsilon(0.02));
    CHECK(hausdorff(S.hull, mapped_half_disk(Mat2::Identity(), std::sqrt(2 * h))) <= 2 * u.grid->delta);
    for (const auto& p : S.cloud) CHECK(0.5 * p.squaredNorm() < h + u.grid->delta * u.grid->delta);
  }
}

TEST_CASE("anisotropic a = 4, h = 1/64: half-ellipse within 2 delta")
{
  const double a = 4.0, h = 1.0 / 64.0;
  const Field u = oracle_field(anisotropic(a));
  const Section S = section(u, Vec2::Zero(), h, AffineFunction{});
  // {a x1^2 + x2^2 / a < 2h} = diag(1/sqrt a, sqrt a) B_sqrt(2h)
  const Mat2 M = Vec2(1.0 / std::sqrt(a), std::sqrt(a)).asDiagonal();
  CHECK(hausdorff(S.hull, mapped_half_disk(M, std::sqrt(2 * h))) <= 2 * u.grid->delta);
}

TEST_CASE("slid oracle section is the sheared half-disk")
{
  const double nu = 1.0, h = 1.0 / 64.0;
  const Field u = oracle_field(slid(nu));
  const Section S = section(u, Vec2::Zero(), h, AffineFunction{});
  // u(x) = |B x|^2 / 2 with B x = x + nu x_2 e_1, so S = B^-1 (half-disk)
  Mat2 Binv;
  Binv << 1.0, -nu, 0.0, 1.0;
  CHECK(hausdorff(S.hull, mapped_half_disk(Binv, std::sqrt(2 * h))) <= 2 * u.grid->delta);
}

TEST_CASE("center-of-mass slide: symmetric section needs none")
{
  const Field u = oracle_field(exact_oracle("isotropic"));
  const auto [A, T] = center_of_mass_slide(section(u, Vec2::Zero(), 1.0 / 16.0, AffineFunction{}));
  CHECK(std::abs(A.nu.x()) <= 1e-9);
  CHECK(A.det() == 1.0);
}

TEST_CASE("center-of-mass slide recovers the construction shear")
{
  // the section is B^-1 of a symmetric set, so the normalizing map is B itself:
  // A x = x - nu_A x_2 e_1 with nu_A = -nu
  const double nu = 1.0;
  const Field u = oracle_field(slid(nu));
  const Section S = section(u, Vec2::Zero(), 1.0 / 64.0, AffineFunction{});
  const auto [A, T] = center_of_mass_slide(S);
  CHECK(std::abs(A.nu.x()) == doctest::Approx(nu).epsilon(0.05));
  CHECK(A.nu.x() == doctest::Approx(-nu).epsilon(0.05));
  CHECK(A.nu.y() == 0.0);
  CHECK(std::abs(T.centroid.x()) <= 1e-12);
  CHECK(A.det() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(A.apply(Vec2(0.3, 0.0)) == Vec2(0.3, 0.0));
}

TEST_CASE("center-of-mass slide rejects a section with its centroid on the edge")
{
  Section S;
  S.hull = {{-1, 0}, {1, 0}, {0, 1}};
  S.centroid = Vec2(0.0, 0.0);
  CHECK_THROWS_AS(center_of_mass_slide(S), SectionError);
}

TEST_CASE("section below the grid resolution names the minimal level")
{
  const Field u = oracle_field(exact_oracle("isotropic"), 1.0 / 32.0);
  try {
    section(u, Vec2::Zero(), 1e-9, AffineFunction{});
    FAIL("expected an empty section");
  } catch (const SectionError& e) {
    CHECK(std::string(e.what()).find("delta^2") != std::string::npos);
  }
}

TEST_CASE("john ellipsoid of the square is the unit disk; sqrt 2 dilation covers the square")
{
  const std::vector<Vec2> sq = {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
  const Ellipse E = john_ellipsoid(sq);
  CHECK((E.Q - Mat2::Identity()).norm() <= 1e-5);
  CHECK(E.center.norm() <= 1e-6);
  const Ellipse D = E.scaled(std::sqrt(2.0));
  for (const auto& v : sq) CHECK(D.contains(v, 1e-5));
  // brute force: a slightly smaller dilation misses the corners
  for (const auto& v : sq) CHECK_FALSE(E.scaled(std::sqrt(2.0) * 0.999).contains(v));
  check_sandwich(E, sq);
}

TEST_CASE("john ellipsoid of the half-disk matches the grid-search oracle")
{
  const ConvexDomain d = half_disk(1.0, 1024);
  const Ellipse E = john_ellipsoid(d.boundary);
  const double oracle = half_disk_mvie_area_oracle(1.0);
  CHECK(E.volume() == doctest::Approx(oracle).epsilon(5e-3));
  CHECK(E.volume() >= oracle * (1 - 5e-3));
  CHECK(std::abs(E.center.x()) <= 1e-6);
  check_sandwich(E, d.boundary);
}

TEST_CASE("john ellipsoid of an ellipse is the ellipse itself")
{
  const double a = 1.5, b = 0.5;
  const Ellipse E = john_ellipsoid(ellipse_polygon(a, b, 8192));
  const double ratio = E.volume() / (std::numbers::pi * a * b);
  CHECK(std::abs(ratio - 1.0) <= 1e-6);
  const Vec2 ax = E.semi_axes();
  CHECK(ax.x() == doctest::Approx(b).epsilon(1e-6));
  CHECK(ax.y() == doctest::Approx(a).epsilon(1e-6));
}

TEST_CASE("degenerate hull is rejected with the thin direction")
{
  const std::vector<Vec2> flat = {{0, 0}, {1, 0}, {2, 1e-15}};
  try {
    john_ellipsoid(flat);
    FAIL("expected rejection");
  } catch (const EllipsoidError& e) {
    CHECK(std::string(e.what()).find("direction") != std::string::npos);
  }
}

TEST_CASE("b(h) is sqrt 2 for the isotropic oracle and sqrt(2a) for the anisotropic one")
{
  const Field iso = oracle_field(exact_oracle("isotropic"));
  const Field an = oracle_field(anisotropic(0.25));
  for (double h : {1.0 / 8.0, 1.0 / 32.0, 1.0 / 128.0}) {
    CHECK(b_value(iso, Vec2::Zero(), h, AffineFunction{}) == doctest::Approx(std::sqrt(2.0)).epsilon(0.01));
    CHECK(b_value(an, Vec2::Zero(), h, AffineFunction{}) == doctest::Approx(std::sqrt(0.5)).epsilon(0.01));
  }
}

TEST_CASE("scaling rule: b of beta u at beta h is beta^(-1/2) b")
{
  const OracleTriple o = exact_oracle("isotropic");
  const Field u = oracle_field(o);
  for (double beta : {0.5, 3.0, 10.0}) {
    const Field v = Field::from_function(u.grid, [&](const Vec2& x) { return beta * o.u(x); });
    Field vb = v;
    auto g = u.grid->with_boundary_data(sample_boundary_function(u.grid->spec->domain, [&](const Vec2& x) { return beta * o.u(x); }));
    vb.grid = g;
    for (double h : {1.0 / 16.0, 1.0 / 64.0}) {
      const double b1 = b_value(u, Vec2::Zero(), h, AffineFunction{});
      const double b2 = b_value(vb, Vec2::Zero(), beta * h, AffineFunction{});
      CHECK(std::abs(b2 - b1 / std::sqrt(beta)) <= 1e-12 * b1);
    }
  }
}

TEST_CASE("volume scan: slope 1 and ratio pi on isotropic and anisotropic oracles")
{
  const auto ladder = dyadic_ladder(2, 10);
  for (const Field& u : {oracle_field(exact_oracle("isotropic")), oracle_field(anisotropic(2.0))}) {
    const VolumeScan v = volume_scaling_scan(u, Vec2::Zero(), ladder, AffineFunction{});
    CHECK(v.h.size() >= 4);
    CHECK(v.slope == doctest::Approx(1.0).epsilon(0.05));
    CHECK(v.ratio_min >= std::numbers::pi * 0.98);
    CHECK(v.ratio_max <= std::numbers::pi * 1.02);
  }
}

TEST_CASE("volume scan needs four resolvable levels")
{
  const Field u = oracle_field(exact_oracle("isotropic"), 1.0 / 16.0);
  CHECK_THROWS_AS(volume_scaling_scan(u, Vec2::Zero(), {0.25, 0.125, 0.0625}, AffineFunction{}), SectionError);
}

TEST_CASE("b-ratio bounds hold on solved profiles")
{
  auto spec = std::make_shared<const ProblemSpec>(make_problem(
      half_disk(), [](const Vec2& x) { return x.y() < 1e-12 ? x.x() * x.x() : 1.0; }, one, 1.0, 1.0));
  const Field u = solve_dirichlet(discretize(spec, 1.0 / 64.0, 2), one);
  const BProfile p = b_profile(u, Vec2::Zero(), dyadic_ladder(), AffineFunction{});
  REQUIRE(p.entries.size() >= 4);
  const BRatioCheck r = b_ratio_bounds(p);
  CHECK(r.pass(0.02));
  // skipped levels are exactly the ones below the resolution floor
  for (const auto& e : p.entries) CHECK(e.lattice_nodes >= 50);
}

TEST_CASE("b-ratio oracle: pairwise envelope recomputed from the profile")
{
  const Field u = oracle_field(anisotropic(2.0));
  const BProfile p = b_profile(u, Vec2::Zero(), dyadic_ladder(2, 10), AffineFunction{});
  double low = -1e300, high = -1e300;
  for (const auto& a : p.entries)
    for (const auto& b : p.entries) {
      if (!(a.h < b.h)) continue;
      const double r = a.b / b.b, lo = std::sqrt(a.h / b.h), hi = std::sqrt(b.h / a.h);
      low = std::max(low, (lo - r) / lo);
      high = std::max(high, (r - hi) / hi);
    }
  const BRatioCheck c = b_ratio_bounds(p);
  CHECK(c.worst_low == doctest::Approx(low).epsilon(1e-12));
  CHECK(c.worst_high == doctest::Approx(high).epsilon(1e-12));
}

TEST_CASE("doubling: isotropic oracle with c0 = 0.1 is vacuous")
{
  const Field u = oracle_field(exact_oracle("isotropic"));
  const DoublingReport d = doubling_scan(b_profile(u, Vec2::Zero(), dyadic_ladder(2, 10), AffineFunction{}), 0.1);
  CHECK(d.vacuous);
  CHECK(d.h.empty());
}

TEST_CASE("doubling: a flattened construction with small b reports its ratio array")
{
  // b = sqrt(2a) = 0.707 < c0 = 1 at every level; b is constant so every ratio is 1
  const Field u = oracle_field(anisotropic(0.25));
  const BProfile p = b_profile(u, Vec2::Zero(), dyadic_ladder(3, 10), AffineFunction{});
  const DoublingReport d = doubling_scan(p, 1.0);
  CHECK_FALSE(d.vacuous);
  CHECK(d.h.size() == p.entries.size());
  REQUIRE(d.max_ratio.size() == d.h.size());
  for (double r : d.max_ratio) CHECK(r == doctest::Approx(1.0).epsilon(0.02));
  for (char c : d.doubled) CHECK(c == 0);
}

TEST_CASE("sliding invariance of b and section area")
{
  const Field u = oracle_field(exact_oracle("isotropic"));
  for (double nu : {0.5, -1.0}) {
    const Field v = slide_field(u, Slide2(Vec2(nu, 0.0)), u.grid->delta);
    for (double h : {1.0 / 16.0, 1.0 / 64.0}) {
      const Section S = section(u, Vec2::Zero(), h, AffineFunction{});
      const Section T = section(v, Vec2::Zero(), h, AffineFunction{});
      CHECK(T.area == doctest::Approx(S.area).epsilon(0.02));
      CHECK(b_value(T) == doctest::Approx(b_value(S)).epsilon(0.02));
    }
  }
}

TEST_CASE("localization constants of the isotropic oracle equal sqrt(2 pi)")
{
  // E_h is the disk of area h about the origin, S_h the half-disk of radius sqrt(2h):
  // k E_h cap Omega = S_h exactly when k sqrt(h / pi) = sqrt(2h)
  const Field u = oracle_field(exact_oracle("isotropic"));
  const double k = std::sqrt(2 * std::numbers::pi);
  for (double h : {1.0 / 8.0, 1.0 / 32.0}) {
    const Localization L = localization_constants(u, Vec2::Zero(), h, AffineFunction{});
    CHECK(L.k_in == doctest::Approx(k).epsilon(0.02));
    CHECK(L.k_out == doctest::Approx(k).epsilon(0.02));
    CHECK(L.E_h.volume() == doctest::Approx(h).epsilon(1e-9));
  }
}

TEST_CASE("localization constants are invariant under sliding and unimodular stretching")
{
  const double h = 1.0 / 32.0;
  const Field u = oracle_field(exact_oracle("isotropic"));
  const Localization L = localization_constants(u, Vec2::Zero(), h, AffineFunction{});
  const Field v = slide_field(u, Slide2(Vec2(0.5, 0.0)), u.grid->delta);
  const Localization Ls = localization_constants(v, Vec2::Zero(), h, AffineFunction{});
  CHECK(Ls.k_in == doctest::Approx(L.k_in).epsilon(0.02));
  CHECK(Ls.k_out == doctest::Approx(L.k_out).epsilon(0.02));
  CHECK(Ls.nu.x() == doctest::Approx(-0.5).epsilon(0.05));
  const Localization La = localization_constants(oracle_field(anisotropic(2.0)), Vec2::Zero(), h, AffineFunction{});
  CHECK(La.k_in == doctest::Approx(L.k_in).epsilon(0.02));
  CHECK(La.k_out == doctest::Approx(L.k_out).epsilon(0.02));
}

TEST_CASE("MVIE sandwich holds on extracted sections")
{
  const Field u = oracle_field(slid(0.5));
  for (double h : {1.0 / 8.0, 1.0 / 64.0}) {
    const Section S = section(u, Vec2::Zero(), h, AffineFunction{});
    check_sandwich(john_ellipsoid(S), S.hull);
  }
}

TEST_CASE("profile CSV has the fixed column order")
{
  const Field u = oracle_field(exact_oracle("isotropic"));
  const BProfile p = b_profile(u, Vec2::Zero(), {0.25, 0.125}, AffineFunction{});
  const std::string csv = p.to_csv();
  CHECK(csv.rfind("h,area,b,nu_1,nu_2,k_in,k_out,semi_axis_1,semi_axis_2", 0) == 0);
}
