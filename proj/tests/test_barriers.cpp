#include "doctest.h"

#include "json.hpp"
#include "mongelab/barriers.hpp"

#include <cmath>
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

std::shared_ptr<const Grid> grid(const ScalarField& phi, double delta, ConvexDomain dom = half_disk(),
                                 const ScalarField& f = one, double lam = 1.0, double Lam = 1.0)
{
  auto spec = std::make_shared<const ProblemSpec>(make_problem(std::move(dom), phi, f, lam, Lam));
  return discretize(spec, delta, 2);
}

Field exact(const ScalarField& u, double delta, ConvexDomain dom = half_disk())
{
  return Field::from_function(grid(u, delta, std::move(dom)), u);
}

// independent check of the claim a certificate makes: b <= target (lower) or
// b >= target (upper) at every region node
double comparison_violation(const Barrier& b, const Field& u, const CertRegion& r,
                            const std::function<double(int)>& target)
{
  double worst = 0.0;
  const Grid& g = *u.grid;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const Vec2& x = g.nodes[i];
    if (!r.contains(x, u.u[i]) || !b.valid_at(x)) continue;
    const double bv = b(x), t = target(int(i));
    worst = std::max(worst, b.side == BarrierSide::Lower ? bv - t : t - bv);
  }
  return worst;
}

// radial profile c (4^beta - r^-beta): phi'' and phi'/r written out directly
Vec2 radial_eigs_oracle(double beta, double r)
{
  const double c = 1.0 / (std::pow(4.0, beta) - std::pow(2.0, beta));
  return {-c * beta * (beta + 1.0) * std::pow(r, -beta - 2.0), c * beta * std::pow(r, -beta - 1.0) / r};
}

}  // namespace

TEST_CASE("TW-lower-v has the closed form mu|x'|^2 + Lambda/mu x_n^2 - C x_n and det 4 Lambda")
{
  const Barrier b = barrier_catalog("TW-lower-v", {{"mu", 0.5}, {"Lambda", 1.0}, {"C", 0.3}});
  CHECK(b.side == BarrierSide::Lower);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int s = 0; s < 50; ++s) {
    const Vec2 x(U(rng), U(rng));
    CHECK(b(x) == doctest::Approx(0.5 * x.x() * x.x() + 2.0 * x.y() * x.y() - 0.3 * x.y()).epsilon(1e-14));
    CHECK(b.det(x) == doctest::Approx(4.0).epsilon(1e-14));
  }
}

TEST_CASE("TW-upper-w has det 2 Lambda for every h and C1 in the plane")
{
  // (h^(1/3)/C1^2) (2 Lambda C1^2 h^(-1/3)) with a = 2/3
  for (double h : {0.5, 0.0625, 1e-3})
    for (double C1 : {0.3, 1.0, 4.0}) {
      const Barrier b = barrier_catalog("TW-upper-w", {{"h", h}, {"C1", C1}, {"Lambda", 1.5}, {"eps", 0.01}});
      CHECK(b.side == BarrierSide::Lower);
      CHECK(b.det(Vec2(0.1, 0.2)) == doctest::Approx(3.0).epsilon(1e-12));
      const Vec2 x(0.3, 0.2);
      const double ref = 0.01 * x.y() + 0.5 * h * std::pow(x.x() / (C1 * std::pow(h, 1.0 / 3.0)), 2) +
                         1.5 * C1 * C1 * h * std::pow(x.y() / std::pow(h, 2.0 / 3.0), 2);
      CHECK(b(x) == doctest::Approx(ref).epsilon(1e-12));
    }
}

TEST_CASE("pogorelov-w touches u0 at x0 and has det 4")
{
  const Barrier b = barrier_catalog("pogorelov-w", {{"x0", 0.25}, {"delta", 0.2}, {"k", 0.5}, {"u0", 0.03}, {"s0", 0.25}});
  CHECK(b.anchored);
  CHECK(b.anchor.isApprox(Vec2(0.25, 0.0)));
  CHECK(b(Vec2(0.25, 0.0)) == doctest::Approx(0.03).epsilon(1e-14));
  const Vec2 x(0.4, 0.1);
  const double ref = 0.03 + 0.25 * 0.15 + 0.2 * 0.15 * 0.15 + (0.01 - 0.1 / 0.5) / 0.2;
  CHECK(b(x) == doctest::Approx(ref).epsilon(1e-14));
  CHECK(b.det(x) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK_THROWS_AS(barrier_catalog("pogorelov-w", {{"delta", 1.0}, {"k", 0.5}}), BarrierError);
}

TEST_CASE("catalog rejects unknown names, missing parameters and bad ranges")
{
  CHECK_THROWS_AS(barrier_catalog("no-such", {}), BarrierError);
  try {
    barrier_catalog("TW-lower-v", {{"mu", 1.0}, {"C", 0.0}});
    FAIL("expected a throw");
  } catch (const BarrierError& e) {
    CHECK(std::string(e.what()).find("Lambda") != std::string::npos);
  }
  CHECK_THROWS_AS(barrier_catalog("TW-lower-v", {{"mu", -1.0}, {"Lambda", 1.0}, {"C", 0.0}}), BarrierError);
  CHECK_THROWS_AS(barrier_catalog("phi-y", {{"eps", 2.0}}), BarrierError);
  CHECK_THROWS_AS(barrier_catalog("pogorelov-mixed-v", {{"gamma1", 0.0}, {"gamma2", 0.0}}), BarrierError);
  for (auto k : {BarrierKind::TwLowerV, BarrierKind::TwUpperW, BarrierKind::PogorelovW,
                 BarrierKind::PogorelovMixedV, BarrierKind::RadialPhi, BarrierKind::PhiY})
    CHECK(barrier_kind(to_string(k)) == k);
}

TEST_CASE("radial profile: boundary values, eigenvalues and trace bound")
{
  for (double beta : {0.5, 2.0, 7.3}) {
    const double c = radial_c(beta);
    CHECK(c * (std::pow(4.0, beta) - std::pow(0.25, -beta)) == doctest::Approx(0.0).scale(1.0));
    CHECK(c * (std::pow(4.0, beta) - std::pow(0.5, -beta)) == doctest::Approx(1.0).epsilon(1e-12));
    for (double r : {0.25, 0.3, 0.5}) {
      const Vec2 e = radial_eigenvalues(beta, r), o = radial_eigs_oracle(beta, r);
      CHECK(e(0) == doctest::Approx(o(0)).epsilon(1e-12));
      CHECK(e(1) == doctest::Approx(o(1)).epsilon(1e-12));
      CHECK(e(0) < 0);
      CHECK(e(1) > 0);
    }
  }
  // the Hessian of phi(x - y) along and across x - y, by finite differences
  const Barrier b = barrier_catalog("radial-phi", {{"beta", 3.0}, {"scale", 1.0}});
  const Vec2 x(0.2, 0.05), z = x - b.y, e = z.normalized(), t(-e.y(), e.x());
  const double hstep = 1e-4;
  auto d2 = [&](const Vec2& d) { return (b(x + hstep * d) - 2 * b(x) + b(x - hstep * d)) / (hstep * hstep); };
  const Vec2 o = radial_eigs_oracle(3.0, z.norm());
  CHECK(d2(e) == doctest::Approx(o(0)).epsilon(1e-5));
  CHECK(d2(t) == doctest::Approx(o(1)).epsilon(1e-5));
}

TEST_CASE("choose_beta maximizes the trace margin and makes it positive")
{
  for (double C0 : {0.75, 1.0, 2.0}) {
    const RadialTrace best = choose_beta(C0);
    CHECK(best.eta0 > 0);
    CHECK(best.a_min == doctest::Approx(1.0 / (2.0 * C0)));
    CHECK(best.a_max == doctest::Approx(2.0 * C0));
    // brute-force oracle: eta0(beta) = -max over r and extreme A of a_r l_r + a_t l_t
    double brute = -1e300;
    for (double beta = 0.05; beta <= 80.0; beta += 0.05) {
      double worst = -1e300;
      for (int s = 0; s <= 64; ++s) {
        const Vec2 ev = radial_eigs_oracle(beta, 0.25 + 0.25 * s / 64.0);
        worst = std::max(worst, best.a_min * ev(0) + best.a_max * ev(1));
        worst = std::max(worst, best.a_max * ev(0) + best.a_max * ev(1));
        worst = std::max(worst, best.a_min * ev(0) + best.a_min * ev(1));
      }
      brute = std::max(brute, -worst);
    }
    CHECK(best.eta0 >= brute * (1.0 - 1e-3));
  }
  CHECK_THROWS_AS(choose_beta(0.0), BarrierError);
}

TEST_CASE("closed-form determinants agree with finite differences for every catalog entry")
{
  const std::vector<std::pair<std::string, std::map<std::string, double>>> cat = {
      {"TW-lower-v", {{"mu", 0.25}, {"Lambda", 1.0}, {"C", 1.0}}},
      {"TW-upper-w", {{"h", 0.0625}, {"C1", 0.9}, {"Lambda", 1.0}, {"eps", 1e-3}}},
      {"pogorelov-w", {{"delta", 0.3}, {"k", 0.5}}},
      {"pogorelov-mixed-v", {{"gamma1", 2.0}, {"gamma2", 0.4}}},
      {"radial-phi", {{"C0", 1.0}, {"scale", 0.2}}},
      {"phi-y", {{"C0", 1.0}, {"eps", 0.1}, {"p11", 1.2}, {"p12", 0.1}, {"p22", 0.9}}},
  };
  for (const auto& [name, p] : cat) {
    CAPTURE(name);
    const Barrier b = barrier_catalog(name, p);
    const FdCheck fd = fd_determinant_check(b, Vec2(-0.5, -0.75), Vec2(0.5, 0.25), 100, 11);
    CHECK(fd.samples == 100);
    CHECK(fd.pass(1e-6));
  }
}

TEST_CASE("TW-lower-v certificate on the isotropic field: searched C lies in the closed-form window")
{
  // u - b = x1^2/4 - 7/2 x_n^2 + C x_n on the slab x_n <= rho; the binding
  // boundary nodes sit on x1 = 0 with x_n in [rho, rho + 2 delta]
  const double delta = 1.0 / 32.0;
  const Field u = exact(iso, delta);
  const double rho = u.grid->spec->domain.rho;
  REQUIRE(rho == doctest::Approx(0.5).epsilon(1e-6));
  CertRegion slab;
  slab.name = "slab";
  slab.max_xn = rho;
  const ConstantSearch s =
      search_constant("TW-lower-v", {{"mu", 0.25}, {"Lambda", 1.0}, {"C", 0.0}}, "C", true, 0.0, 1.0, u, slab);
  CHECK(s.threshold >= 3.5 * rho * (1 - 1e-6));
  CHECK(s.threshold <= 3.5 * (rho + 2 * delta));
  CHECK(s.value == doctest::Approx(1.1 * s.threshold));
  const Certificate& c = s.certificate;
  CHECK(c.certified());
  CHECK(c.det_margin == doctest::Approx(3.0));
  CHECK(c.discrete_margin > 0);
  CHECK(c.boundary_margin > 0);
  CHECK(c.region_nodes > 0);
  CHECK(comparison_violation(s.barrier, u, slab, [&](int i) { return u.u[i]; }) <= c.tolerance);

  SUBCASE("lowering by 1e-3 keeps the certificate and widens the boundary margin")
  {
    const Certificate c2 = certify_lower_bound(s.barrier.lowered(1e-3), u, slab);
    CHECK(c2.certified());
    // the lowered barrier no longer touches u, so the former anchor joins the boundary
    CHECK(std::abs(c.anchor_gap) <= 1e-12);
    CHECK(c2.boundary_margin == doctest::Approx(std::min(c.boundary_margin, c.anchor_gap) + 1e-3).epsilon(1e-9));
    CHECK(c2.params.at("lowered_by") == doctest::Approx(1e-3));
  }
  SUBCASE("a C below the window fails boundary domination at a named point")
  {
    const Barrier b = barrier_catalog("TW-lower-v", {{"mu", 0.25}, {"Lambda", 1.0}, {"C", 0.5 * 3.5 * rho}});
    const Certificate bad = certify_lower_bound(b, u, slab);
    CHECK_FALSE(bad.certified());
    CHECK(bad.boundary_margin < 0);
    CHECK(bad.message.find("boundary domination") != std::string::npos);
    CHECK(bad.worst_boundary.y() > rho);
    // the reported gap is the gap of the closed forms at the reported point
    const Vec2 w = bad.worst_boundary;
    CHECK(bad.boundary_margin == doctest::Approx(iso(w) - b(w)).epsilon(1e-9));
  }
}

TEST_CASE("a barrier equal to u is rejected by the determinant precondition")
{
  // mu = 1/2, Lambda = 1/4, C = 0 gives |x|^2/2 with det 1 = f
  const Field u = exact(iso, 1.0 / 32.0);
  const Barrier b = barrier_catalog("TW-lower-v", {{"mu", 0.5}, {"Lambda", 0.25}, {"C", 0.0}});
  const Certificate c = certify_lower_bound(b, u, CertRegion{});
  CHECK_FALSE(c.certified());
  CHECK(c.det_margin == doctest::Approx(0.0).scale(1.0));
  CHECK(c.message.find("determinant") != std::string::npos);
}

TEST_CASE("TW-lower-v is certified against the solved isotropic problem")
{
  const Field u = solve_dirichlet(grid(iso, 1.0 / 32.0), one);
  CertRegion slab;
  slab.max_xn = u.grid->spec->domain.rho;
  const Barrier b = barrier_catalog("TW-lower-v", {{"mu", 0.25}, {"Lambda", 1.0}, {"C", 2.5}});
  const Certificate c = certify_lower_bound(b, u, slab);
  CHECK(c.certified());
  CHECK(comparison_violation(b, u, slab, [&](int i) { return u.u[i]; }) <= c.tolerance);
}

TEST_CASE("empty regions are inapplicable")
{
  const Field u = exact(iso, 1.0 / 32.0);
  CertRegion r;
  r.max_xn = -1.0;
  const Certificate c = certify_lower_bound(barrier_catalog("TW-lower-v", {{"mu", 0.25}, {"Lambda", 1.0}, {"C", 2.0}}),
                                            u, r);
  CHECK(c.verdict == "inapplicable");
  CHECK(c.region_nodes == 0);
}

TEST_CASE("pogorelov-mixed-v against D_1 u on the anchor field: searched gamma2 in the closed-form window")
{
  // with u = |x|^2/2, l = 0, delta = 1/4, gamma1 = 1: b - D_1 u = -x1^2/4 + 7/2 x_n^2 - 4 gamma2 x_n,
  // binding on x1 = 0 at the edge of {u < 1/8}, where x_n lies in [1/2, 1/2 + 2 delta]
  const double delta = 1.0 / 32.0;
  const Field u = exact(iso, delta, half_disk(std::sqrt(2.0)));
  CertRegion D;
  D.name = "D";
  D.sublevel = 0.125;
  const ConstantSearch s = search_constant("pogorelov-mixed-v", {{"x0", 0.0}, {"gamma1", 1.0}, {"gamma2", 0.0}},
                                           "gamma2", true, 0.0, 1.0, u, D);
  CHECK(s.threshold >= 0.875 * 0.5 * (1 - 1e-6));
  CHECK(s.threshold <= 0.875 * (0.5 + 2 * delta));
  CHECK(s.certificate.certified());
  CHECK(s.certificate.det_margin == doctest::Approx(3.0));
  // b - gamma1 (u - l) <= D_1 u = x1, written as b <= x1 + gamma1 (u - l)
  CHECK(comparison_violation(s.barrier, u, D, [&](int i) {
          const Vec2& x = u.grid->nodes[i];
          return x.x() + s.barrier.gamma1 * (u.u[i] - s.barrier.l_ref(x));
        }) <= 1e-9);
}

TEST_CASE("radial-phi and phi-y certify upper bounds against a Hoelder right-hand side")
{
  const ScalarField f = [](const Vec2& x) { return 1.0 + 0.5 * std::sqrt(x.norm()); };
  const ScalarField phi = [](const Vec2& x) { return 0.5 * x.squaredNorm() + 0.002 * (1.0 + x.x()); };
  const Field u = solve_dirichlet(grid(phi, 1.0 / 32.0, half_disk(), f, 1.0, 2.0), f);
  CertRegion ann;
  ann.name = "annulus";
  ann.annulus_center = Vec2(0.0, -0.25);
  ann.annulus_in = 0.25;
  ann.annulus_out = 0.5;
  const ConstantSearch r =
      search_constant("radial-phi", {{"C0", 1.0}, {"scale", 0.2}, {"shift", 0.0}}, "shift", true, 0.0, 1.0, u, ann);
  CHECK(r.barrier.side == BarrierSide::Upper);
  CHECK(r.certificate.certified());
  CHECK(comparison_violation(r.barrier, u, ann, [&](int i) { return u.u[i]; }) <= r.certificate.tolerance);
  const ConstantSearch p = search_constant("phi-y", {{"C0", 1.0}, {"eps", 0.1}, {"delta", 0.1}, {"C1", 0.0}}, "C1",
                                           true, 1e-6, 1.0, u, ann);
  CHECK(p.certificate.certified());
  CHECK(comparison_violation(p.barrier, u, ann, [&](int i) { return u.u[i]; }) <= p.certificate.tolerance);
}

TEST_CASE("slope intervals contain gamma at flat boundary points of the isotropic field")
{
  const Field u = exact(iso, 1.0 / 32.0);
  const SlopeInterval a = slope_bound_from_barrier(u, Vec2(0.0, 0.0), 0.5);
  CHECK(a.contains(a.gamma));
  CHECK(std::abs(a.gamma) <= 1e-6);
  CHECK(a.lo == doctest::Approx(-1.0 / (a.delta * 0.5)));
  CHECK(a.hi == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(a.certificate.certified());
  CHECK(a.certificate.anchor_gap == doctest::Approx(0.0).scale(1.0));

  const SlopeInterval b = slope_bound_from_barrier(u, Vec2(0.25, 0.0), 0.5);
  CHECK(b.contains(b.gamma));
  // (max phi - u(x0)) over the distance to the arc along e_n
  CHECK(b.hi == doctest::Approx((0.5 - 0.03125) / std::sqrt(15.0 / 16.0)).epsilon(1e-6));

  CHECK_THROWS_AS(slope_bound_from_barrier(u, Vec2(0.0, 0.1), 0.5), BarrierError);
  CHECK_THROWS_AS(slope_bound_from_barrier(u, Vec2(0.0, 0.0), 0.0), BarrierError);
}

TEST_CASE("certificate JSON carries the verdict and margins")
{
  const Field u = exact(iso, 1.0 / 32.0);
  CertRegion slab;
  slab.name = "slab";
  slab.max_xn = 0.5;
  const Certificate c =
      certify_lower_bound(barrier_catalog("TW-lower-v", {{"mu", 0.25}, {"Lambda", 1.0}, {"C", 2.5}}), u, slab);
  const auto j = nlohmann::json::parse(c.to_json());
  CHECK(j.at("name") == "TW-lower-v");
  CHECK(j.at("verdict") == c.verdict);
  CHECK(j.at("region") == "slab");
  CHECK(j.at("params").at("C").get<double>() == 2.5);
  CHECK(j.at("boundary_margin").get<double>() == c.boundary_margin);
}
