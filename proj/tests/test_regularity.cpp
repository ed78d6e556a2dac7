#include "doctest.h"

#include "mongelab/regularity.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace mongelab;

namespace {

const ScalarField one = [](const Vec2&) { return 1.0; };
const ScalarField iso = [](const Vec2& x) { return 0.5 * x.squaredNorm(); };

ConvexDomain half_disk(double R = 1.0, std::size_t n = 2048)
{
  DomainDescription d;
  d.kind = DomainDescription::Kind::HalfDisk;
  d.radius = R;
  d.samples = n;
  return make_domain(d);
}

std::shared_ptr<const ProblemSpec> problem(ConvexDomain dom, const ScalarField& phi, const ScalarField& f = one,
                                           double lam = 1.0, double Lam = 1.0)
{
  return std::make_shared<const ProblemSpec>(make_problem(std::move(dom), phi, f, lam, Lam));
}

Field exact_field(const ScalarField& u, double delta, const ScalarField& f = one)
{
  return Field::from_function(discretize(problem(half_disk(), u, f), delta, 2), u);
}

Field solved(const ScalarField& phi, double delta, ConvexDomain dom = half_disk(), const ScalarField& f = one)
{
  return solve_dirichlet(discretize(problem(std::move(dom), phi, f), delta, 2), f);
}

double max_rescaled_error(const RescaledField& R, const ScalarField& target)
{
  double e = 0.0;
  for (std::size_t i = 0; i < R.field.grid->unknowns(); ++i)
    e = std::max(e, std::abs(R.field.u[i] - target(R.field.grid->nodes[i])));
  return e;
}

}  // namespace

TEST_CASE("tangent plane of the isotropic solve at the origin is zero")
{
  const Field u = solved(iso, 1.0 / 64.0);
  const TangentPlane tp = tangent_plane(u, Vec2::Zero());
  CHECK(std::abs(tp.l.c) <= 1e-9);
  CHECK(tp.l.p.norm() <= 1e-3);
  CHECK(tp.support_min >= -1e-6);
  CHECK(tp.normal.isApprox(Vec2(0, 1)));
}

TEST_CASE("tangent plane of |x|^2/2 + x_n is x_n")
{
  const ScalarField phi = [](const Vec2& x) { return 0.5 * x.squaredNorm() + x.y(); };
  const Field u = solved(phi, 1.0 / 64.0);
  const TangentPlane tp = tangent_plane(u, Vec2::Zero());
  CHECK(tp.gamma == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(std::abs(tp.tangential_slope) <= 1e-6);
  CHECK(tp.support_min >= -1e-6 * std::max(1.0, u.scale()));
}

TEST_CASE("zero data on a disk: the tangent plane at the origin is -mu x_n with mu = 1")
{
  // exact solution |x - e_2|^2 / 2 - 1/2 on the unit disk through the origin
  DomainDescription d;
  d.kind = DomainDescription::Kind::Disk;
  d.radius = 1.0;
  d.samples = 2048;
  const Field u = solved([](const Vec2&) { return 0.0; }, 1.0 / 64.0, make_domain(d));
  const TangentPlane tp = tangent_plane(u, Vec2::Zero());
  CHECK(tp.gamma < 0);
  CHECK(tp.gamma == doctest::Approx(-1.0).epsilon(0.02));
}

TEST_CASE("rescaling fixes the isotropic oracle and the anisotropic form")
{
  const double delta = 1.0 / 128.0;
  const Field u = exact_field(iso, delta);
  for (double h : {0.25, 1.0 / 16.0, 1.0 / 64.0, 1.0 / 256.0}) {
    const RescaledField R = rescale_section(u, Vec2::Zero(), h);
    CHECK(std::abs(R.A.nu.x()) <= 1e-9);
    CHECK(max_rescaled_error(R, iso) <= 3 * delta);
  }
  const ScalarField an = [](const Vec2& x) { return 0.5 * (2.0 * x.x() * x.x() + 0.5 * x.y() * x.y()); };
  const Field v = exact_field(an, delta);
  for (double h : {1.0 / 16.0, 1.0 / 64.0}) {
    const RescaledField R = rescale_section(v, Vec2::Zero(), h);
    CHECK(std::abs(R.A.nu.x()) <= 1e-9);
    CHECK(max_rescaled_error(R, an) <= 3 * delta);
  }
}

TEST_CASE("rescaling the slid oracle returns the isotropic normal form; sigma shrinks with h")
{
  const double delta = 1.0 / 128.0;
  const ScalarField slid = [](const Vec2& x) {
    const double s = x.x() + 0.5 * x.y();
    return 0.5 * (s * s + x.y() * x.y());
  };
  const Field u = exact_field(slid, delta);
  for (double h : {1.0 / 16.0, 1.0 / 64.0}) {
    const RescaledField R = rescale_section(u, Vec2::Zero(), h);
    CHECK(R.A.nu.x() == doctest::Approx(-0.5).epsilon(0.05));
    CHECK(max_rescaled_error(R, iso) <= 0.05);
  }
  // Hoelder right-hand side: f_h(y) = f(sqrt h A^-1 y), so sigma scales like h^(alpha/2)
  const ScalarField f = [](const Vec2& x) { return 1.0 + 0.5 * std::sqrt(x.norm()); };
  const Field w = exact_field(slid, delta, f);
  double prev = 1e300;
  for (double h : {0.25, 1.0 / 16.0, 1.0 / 64.0}) {
    const double s = rescale_section(w, Vec2::Zero(), h).sigma;
    CHECK(s < prev);
    prev = s;
  }
}

TEST_CASE("quadratic fit of the isotropic oracle is exact")
{
  // nodes are exact; boundary points carry the chord interpolant of the data,
  // whose error is at most L^2/8 |D^2 phi| with L the longest chain segment
  const Field u = exact_field(iso, 1.0 / 128.0);
  const ConvexDomain& dom = u.grid->spec->domain;
  double L = 0.0;
  for (std::size_t i = 0; i < dom.size(); ++i) L = std::max(L, (dom.vertex(i + 1) - dom.vertex(i)).norm());
  const double interp = L * L / 8.0;
  for (auto c : {FitConstraint::Free, FitConstraint::BoundaryMatched}) {
    const FitResult fr = fit_quadratic(u, Vec2::Zero(), 0.25, c);
    CHECK(fr.residual <= interp * (1 + 1e-6));
    // a quadratic of sup size 2*interp on a half-ball of radius r has coefficients
    // bounded by a Markov-type constant times interp/r^k
    CHECK((fr.model.H - Mat2::Identity()).norm() <= 32 * interp / (0.25 * 0.25));
    CHECK(fr.model.p.norm() <= 16 * interp / 0.25);
  }
}

TEST_CASE("fit on too few nodes is rejected")
{
  const Field u = exact_field(iso, 1.0 / 32.0);
  CHECK_THROWS_AS(fit_quadratic(u, Vec2::Zero(), 1.0 / 64.0), RegularityError);
}

TEST_CASE("exponent consistency on homogeneous expansion errors")
{
  // u = |x|^2/2 + c |x|^s: the best-quadratic residual is exactly C r^s
  const double delta = 1.0 / 256.0;
  const auto ladder = radius_ladder();
  SUBCASE("cubic x1^2 x_n")
  {
    const Field u = exact_field([](const Vec2& x) { return 0.5 * x.squaredNorm() + x.x() * x.x() * x.y(); }, delta);
    const RegularityReport r = c2alpha_exponent(u, Vec2::Zero(), ladder);
    CHECK(r.slope == doctest::Approx(3.0).epsilon(0.1 / 3.0));
  }
  SUBCASE("radial |x|^2.5")
  {
    const Field u = exact_field([](const Vec2& x) { return 0.5 * x.squaredNorm() + 0.1 * std::pow(x.norm(), 2.5); }, delta);
    const RegularityReport r = c2alpha_exponent(u, Vec2::Zero(), ladder);
    CHECK(r.slope == doctest::Approx(2.5).epsilon(0.1 / 2.5));
    CHECK(r.alpha_est == doctest::Approx(0.5).epsilon(0.2));
  }
}

TEST_CASE("exponent fit needs five scales and flags non-monotone residuals")
{
  const Field u = exact_field([](const Vec2& x) { return 0.5 * x.squaredNorm() + x.x() * x.x() * x.y(); }, 1.0 / 64.0);
  CHECK_THROWS_AS(c2alpha_exponent(u, Vec2::Zero(), {0.5, 0.25, 0.125}), RegularityError);
  // a kink at |x| = 0.1 makes the residual jump between scales
  const Field v = exact_field(
      [](const Vec2& x) {
        const double r = x.norm();
        return 0.5 * x.squaredNorm() + (r < 0.1 ? 0.0 : 0.3 * (r - 0.1) * (r - 0.1) * (r - 0.1));
      },
      1.0 / 128.0);
  // best-fit sup residuals are monotone on nested balls, so an unsorted ladder exposes the flag
  const RegularityReport r = c2alpha_exponent(v, Vec2::Zero(), {0.1, 0.5, 0.09, 0.08, 0.07});
  CHECK(r.low_confidence);
}

TEST_CASE("regularity report text has key lines and a residual CSV block")
{
  const Field u = exact_field([](const Vec2& x) { return 0.5 * x.squaredNorm() + x.x() * x.x() * x.y(); }, 1.0 / 256.0);
  const std::string t = c2alpha_exponent(u, Vec2::Zero(), radius_ladder(0.5, 1, 6)).to_text();
  CHECK(t.find("slope: ") != std::string::npos);
  CHECK(t.find("alpha_est: ") != std::string::npos);
  CHECK(t.find("r,R,gamma") != std::string::npos);
}

TEST_CASE("determinant perturbation inequality")
{
  SUBCASE("identity, a = 1")
  {
    const DetPerturbation d = det_perturbation_bound(Mat2::Identity(), 1.0);
    CHECK(d.applicable);
    CHECK(d.holds);
    CHECK(d.lhs == 4.0);
    CHECK(d.rhs == 1.25);
  }
  SUBCASE("diag(2, 1/4), a = 0.3")
  {
    const DetPerturbation d = det_perturbation_bound(Vec2(2.0, 0.25).asDiagonal(), 0.3);
    CHECK(d.holds);
    CHECK(d.lhs == doctest::Approx(2.3 * 0.55));
    CHECK(d.rhs == doctest::Approx(0.5 + 0.075));
  }
  SUBCASE("precondition violations")
  {
    CHECK_FALSE(det_perturbation_bound(3.0 * Mat2::Identity(), 0.1).applicable);
    CHECK_FALSE(det_perturbation_bound(Mat2::Identity(), -0.1).applicable);
    Mat2 N;
    N << 1, 0, 0, -1;
    CHECK_FALSE(det_perturbation_bound(N, 0.1).applicable);
  }
  SUBCASE("1e5 random admissible samples")
  {
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    int tested = 0, violations = 0;
    while (tested < 100000) {
      const double th = 2 * std::numbers::pi * U(rng);
      const double l1 = std::exp(4 * U(rng) - 2), det = std::exp(std::log(0.5) + std::log(4.0) * U(rng));
      Mat2 R;
      R << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
      const Mat2 A = R * Vec2(l1, det / l1).asDiagonal() * R.transpose();
      const double a = U(rng);
      const DetPerturbation d = det_perturbation_bound(A, a);
      if (!d.applicable) continue;
      ++tested;
      // the exact inequality, recomputed independently
      const double lhs = (A(0, 0) + a) * (A(1, 1) + a) - A(0, 1) * A(1, 0);
      if (!d.holds || lhs < A.determinant() + a / 4.0) ++violations;
    }
    CHECK(violations == 0);
  }
}

TEST_CASE("Pogorelov anchor: Hessian is the identity and the functional matches its closed form")
{
  // half-disk of radius sqrt 2, data |x'|^2/2 on the edge and 1 on the arc: u = |x|^2/2
  // boundary points carry chord-interpolated data; 40000 samples keep that error
  // below 1e-6 after division by delta^2 at delta = 1/32
  const double R = std::sqrt(2.0), delta = 1.0 / 32.0;
  DomainDescription d;
  d.kind = DomainDescription::Kind::HalfDisk;
  d.radius = R;
  d.samples = 40000;
  const ScalarField phi = [](const Vec2& x) { return x.y() < 1e-12 ? 0.5 * x.x() * x.x() : 1.0; };
  const Field u = solved(phi, delta, make_domain(d));
  const PogorelovStats st = pogorelov_region_bounds(u, 0.5);
  REQUIRE(st.applicable);
  CHECK(st.region_nodes > 0);
  CHECK(std::abs(st.eig_min - 1.0) <= 1e-4);
  CHECK(std::abs(st.eig_max - 1.0) <= 1e-4);
  CHECK(st.functional_max == doctest::Approx(st.functional_closed_form).epsilon(1e-6));
  // independent closed form at the reported argmax, tangential direction: log(k^2/4 - u) + log u_11 + u_1^2 / 2
  const Vec2 x = st.functional_argmax;
  const double k = 0.5, uu = 0.5 * x.squaredNorm();
  const double cf = std::log(0.25 * k * k - uu) + std::log(1.0) + 0.5 * x.x() * x.x();
  CHECK(st.functional_closed_form == doctest::Approx(cf).epsilon(1e-12));
  CHECK(std::abs(st.functional_max - cf) <= 1e-6);
}

TEST_CASE("Pogorelov region is inapplicable for degenerate cubic edge data")
{
  DomainDescription d;
  d.kind = DomainDescription::Kind::HalfDisk;
  d.radius = std::sqrt(2.0);
  d.samples = 2048;
  const ScalarField phi = [](const Vec2& x) {
    const double a = std::abs(x.x());
    return x.y() < 1e-12 ? a * a * a / (2 * std::sqrt(2.0)) : 1.0;
  };
  const Field u = solved(phi, 1.0 / 32.0, make_domain(d));
  const PogorelovStats st = pogorelov_region_bounds(u, 0.5);
  CHECK_FALSE(st.applicable);
  CHECK(st.message.find("inapplicable") != std::string::npos);
}
