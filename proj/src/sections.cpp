#include "mongelab/sections.hpp"

#include "mongelab/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

namespace mongelab {

double Section::max_height() const
{
  double m = 0.0;
  for (const auto& p : hull) m = std::max(m, p.y() - x0.y());
  return m;
}

double Section::diameter() const
{
  double d = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i)
    for (std::size_t j = i + 1; j < hull.size(); ++j) d = std::max(d, (hull[i] - hull[j]).norm());
  return d;
}

Section section(const Field& u, const Vec2& x0, double h, const AffineFunction& l)
{
  if (!(h > 0)) throw SectionError("section level must be positive");
  const Grid& g = *u.grid;
  Section S;
  S.h = h;
  S.x0 = x0;
  S.l = l;
  S.delta = g.delta;

  const std::size_t N = g.nodes.size();
  std::vector<double> gn(N), gb(g.bpoints.size());
  for (std::size_t i = 0; i < N; ++i) gn[i] = u.u[i] - l(g.nodes[i]) - h;
  for (std::size_t b = 0; b < g.bpoints.size(); ++b) gb[b] = g.bpoints[b].value - l(g.bpoints[b].x) - h;

  int interior = 0;
  for (std::size_t i = 0; i < N; ++i)
    if (gn[i] < 0) {
      S.cloud.push_back(g.nodes[i]);
      ++S.lattice_nodes;
      ++interior;
    }
  for (std::size_t b = 0; b < g.bpoints.size(); ++b)
    if (gb[b] < 0) {
      S.cloud.push_back(g.bpoints[b].x);
      if (g.bpoints[b].lattice >= 0) ++S.lattice_nodes;
    }

  auto gval = [&](const Arm& a) { return a.node >= 0 ? gn[a.node] : gb[a.bpoint]; };
  for (std::size_t i = 0; i < N; ++i)
    for (int k = 0; k < 4; ++k)
      for (int side = 0; side < 2; ++side) {
        const Arm& a = g.arm(int(i), k, side);
        const double ge = gval(a);
        const bool in_i = gn[i] < 0, in_e = ge < 0;
        if (in_i == in_e) continue;
        if (a.node >= 0 && !in_i) continue;  // interior edges are cut from their inside end
        const double t = a.frac * gn[i] / (gn[i] - ge);
        const Vec2 dir = (side == 0 ? 1.0 : -1.0) * g.delta * g.dirs[k].cast<double>();
        S.cloud.push_back(g.nodes[i] + t * dir);
      }

  // cuts along the boundary chain (last nb boundary points are the samples)
  const std::size_t nb = g.spec->domain.size();
  const std::size_t first = g.bpoints.size() - nb;
  for (std::size_t s = 0; s < nb; ++s) {
    const std::size_t a = first + s, b = first + (s + 1) % nb;
    if ((gb[a] < 0) == (gb[b] < 0)) continue;
    const double w = gb[a] / (gb[a] - gb[b]);
    S.cloud.push_back(g.bpoints[a].x + w * (g.bpoints[b].x - g.bpoints[a].x));
  }

  S.hull = geom::convex_hull(S.cloud);
  if (interior == 0 || S.hull.size() < 3 || geom::polygon_area(S.hull) <= 0) {
    std::ostringstream os;
    os << "section at h = " << h << " is empty at this resolution; minimal resolvable h is about delta^2 = "
       << g.delta * g.delta;
    throw SectionError(os.str());
  }
  S.area = geom::polygon_area(S.hull);
  S.centroid = geom::polygon_centroid(S.hull);
  return S;
}

Section slide_section(const Section& S, const Slide2& A)
{
  Section T = S;
  auto map = [&](const Vec2& x) -> Vec2 { return S.x0 + A.apply(x - S.x0); };
  for (auto& p : T.cloud) p = map(p);
  for (auto& p : T.hull) p = map(p);
  T.centroid = map(S.centroid);
  T.area = geom::polygon_area(T.hull);
  return T;
}

std::pair<Slide2, Section> center_of_mass_slide(const Section& S)
{
  const Vec2 c = S.centroid - S.x0;
  if (!(c.y() > 0)) {
    std::ostringstream os;
    os << "degenerate section: center of mass height " << c.y() << " <= 0";
    throw SectionError(os.str());
  }
  Slide2 A(Vec2(c.x() / c.y(), 0.0));
  Section T = slide_section(S, A);
  // the slid centroid is exactly on the axis in exact arithmetic
  T.centroid.x() = S.x0.x() + (T.centroid.x() - S.x0.x());
  return {A, T};
}

Ellipse john_ellipsoid(const std::vector<Vec2>& hull)
{
  if (hull.size() < 3) throw EllipsoidError("degenerate hull: fewer than 3 vertices");
  double diam = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i)
    for (std::size_t j = i + 1; j < hull.size(); ++j) diam = std::max(diam, (hull[i] - hull[j]).norm());
  const double area = geom::polygon_area(hull);
  if (!(area > 1e-12 * diam * diam)) {
    Vec2 m = Vec2::Zero();
    for (const auto& p : hull) m += p;
    m /= double(hull.size());
    Mat2 C = Mat2::Zero();
    for (const auto& p : hull) C += (p - m) * (p - m).transpose();
    Eigen::SelfAdjointEigenSolver<Mat2> es(C);
    Vec2 thin = es.eigenvectors().col(0);
    std::ostringstream os;
    os << "degenerate (flat) hull; thin direction (" << thin.x() << ", " << thin.y() << ")";
    throw EllipsoidError(os.str());
  }
  std::vector<Halfspace<2>> hs;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Vec2& p = hull[i];
    const Vec2& q = hull[(i + 1) % hull.size()];
    Vec2 e = q - p;
    Vec2 n(e.y(), -e.x());
    hs.push_back({n, n.dot(p)});
  }
  return max_volume_inscribed_ellipsoid<2>(hs, geom::polygon_centroid(hull), 1e-7);
}

Ellipse john_ellipsoid(const Section& S) { return john_ellipsoid(S.hull); }

double b_value(const Section& S) { return S.max_height() / std::sqrt(S.h); }

double b_value(const Field& u, const Vec2& x0, double h, const AffineFunction& l)
{
  return b_value(section(u, x0, h, l));
}

double b_value(const Field& u, const Vec2& x0, double h)
{
  return b_value(u, x0, h, tangent_plane(u, x0).l);
}

double inner_inclusion_constant(const Ellipse& E, const std::vector<Vec2>& hull, const ConvexDomain& dom,
                                double kmax)
{
  double diam = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i)
    for (std::size_t j = i + 1; j < hull.size(); ++j) diam = std::max(diam, (hull[i] - hull[j]).norm());
  const double tol = 1e-9 * std::max(diam, 1e-300);
  auto inside = [&](const Vec2& p) { return geom::in_convex_polygon(hull, p, tol); };
  auto ok = [&](double k) {
    Ellipse Ek = E.scaled(k);
    for (int a = 0; a < 720; ++a) {
      const double th = 2.0 * std::numbers::pi * a / 720.0;
      Vec2 p = Ek.boundary_point(Vec2(std::cos(th), std::sin(th)));
      if (!inside(p) && dom.contains(p, -tol)) return false;
    }
    for (const auto& c : dom.boundary)
      if (Ek.contains(c) && !inside(c)) return false;
    return true;
  };
  if (ok(kmax)) return kmax;
  double lo = 0.0, hi = kmax;
  while (hi - lo > 1e-3) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? lo : hi) = mid;
  }
  return lo;
}

Localization localization_constants(const Section& S, const ConvexDomain& dom)
{
  Localization L;
  L.h = S.h;
  L.area = S.area;
  L.b = b_value(S);
  L.lattice_nodes = S.lattice_nodes;
  auto [A, St] = center_of_mass_slide(S);
  L.nu = A.nu;
  // E_h is centered at x0, so fit the slid section reflected across the tangent line
  std::vector<Vec2> sym = St.hull;
  for (const auto& v : St.hull) sym.emplace_back(v.x(), 2.0 * S.x0.y() - v.y());
  L.john = john_ellipsoid(geom::convex_hull(sym));
  const double target = std::pow(S.h, 2.0 / 2.0);
  const Mat2 Qh = L.john.Q * std::pow(L.john.volume() / target, 2.0 / 2.0);
  const Mat2 Am = A.matrix();
  L.E_h.center = S.x0;
  L.E_h.Q = Am.transpose() * Qh * Am;
  L.E_h.Q = 0.5 * (L.E_h.Q + L.E_h.Q.transpose());

  double kmax = 0.0;
  for (const auto& v : S.hull) kmax = std::max(kmax, L.E_h.form(v));
  L.k_out = std::sqrt(kmax);

  L.k_in = inner_inclusion_constant(L.E_h, S.hull, dom, L.k_out);
  return L;
}

Localization localization_constants(const Field& u, const Vec2& x0, double h, const AffineFunction& l)
{
  return localization_constants(section(u, x0, h, l), u.grid->spec->domain);
}

Localization localization_constants(const Field& u, const Vec2& x0, double h)
{
  return localization_constants(u, x0, h, tangent_plane(u, x0).l);
}

std::vector<double> dyadic_ladder(int from, int to)
{
  std::vector<double> l;
  for (int m = from; m <= to; ++m) l.push_back(std::ldexp(1.0, -m));
  return l;
}

BProfile b_profile(const Field& u, const Vec2& x0, const std::vector<double>& ladder, const AffineFunction& l,
                   int resolution_floor)
{
  BProfile p;
  for (double h : ladder) {
    std::optional<Section> S0;
    try {
      S0 = section(u, x0, h, l);
    } catch (const SectionError&) {
      p.skipped.push_back(h);
      continue;
    }
    const Section& S = *S0;
    if (!S.resolved(resolution_floor)) {
      p.skipped.push_back(h);
      continue;
    }
    Localization L = localization_constants(S, u.grid->spec->domain);
    BProfileEntry e;
    e.h = h;
    e.area = S.area;
    e.b = L.b;
    e.nu = L.nu;
    e.k_in = L.k_in;
    e.k_out = L.k_out;
    e.semi_axes = L.E_h.semi_axes();
    e.lattice_nodes = S.lattice_nodes;
    p.entries.push_back(e);
  }
  return p;
}

std::string BProfile::to_csv() const
{
  std::ostringstream os;
  os << "h,area,b,nu_1,nu_2,k_in,k_out,semi_axis_1,semi_axis_2\n";
  char buf[512];
  for (const auto& e : entries) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", e.h, e.area, e.b,
                  e.nu.x(), e.nu.y(), e.k_in, e.k_out, e.semi_axes.x(), e.semi_axes.y());
    os << buf;
  }
  return os.str();
}

double BProfile::min_k_in() const
{
  double m = std::numeric_limits<double>::infinity();
  for (const auto& e : entries) m = std::min(m, e.k_in);
  return m;
}

double BProfile::max_nu_over_log_h() const
{
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, e.nu.norm() / std::abs(std::log(e.h)));
  return m;
}

BRatioCheck b_ratio_bounds(const BProfile& p)
{
  BRatioCheck c;
  c.worst_low = c.worst_high = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < p.entries.size(); ++i)
    for (std::size_t j = 0; j < p.entries.size(); ++j) {
      const auto& a = p.entries[i];
      const auto& b = p.entries[j];
      if (!(a.h < b.h)) continue;
      const double r = a.b / b.b;
      const double lo = std::sqrt(a.h / b.h), hi = std::sqrt(b.h / a.h);
      c.worst_low = std::max(c.worst_low, (lo - r) / lo);
      c.worst_high = std::max(c.worst_high, (r - hi) / hi);
    }
  if (!std::isfinite(c.worst_low)) c.worst_low = c.worst_high = 0.0;
  return c;
}

namespace {

VolumeScan fit_volume(const std::vector<double>& h, const std::vector<double>& area)
{
  if (h.size() < 4) throw SectionError("volume scan needs at least 4 resolvable levels, got " + std::to_string(h.size()));
  VolumeScan v;
  v.h = h;
  v.area = area;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = double(h.size());
  v.ratio_min = std::numeric_limits<double>::infinity();
  v.ratio_max = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double x = std::log(h[i]), y = std::log(area[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    const double r = area[i] / h[i];
    v.ratio_min = std::min(v.ratio_min, r);
    v.ratio_max = std::max(v.ratio_max, r);
  }
  v.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return v;
}

}  // namespace

VolumeScan volume_scaling_scan(const BProfile& p)
{
  std::vector<double> h, a;
  for (const auto& e : p.entries) {
    h.push_back(e.h);
    a.push_back(e.area);
  }
  return fit_volume(h, a);
}

VolumeScan volume_scaling_scan(const Field& u, const Vec2& x0, const std::vector<double>& ladder,
                               const AffineFunction& l, int resolution_floor)
{
  std::vector<double> h, a;
  for (double hh : ladder) {
    std::optional<Section> S;
    try {
      S = section(u, x0, hh, l);
    } catch (const SectionError&) {
      continue;
    }
    if (!S->resolved(resolution_floor)) continue;
    h.push_back(hh);
    a.push_back(S->area);
  }
  return fit_volume(h, a);
}

DoublingReport doubling_scan(const BProfile& p, double c0)
{
  DoublingReport r;
  r.c0 = c0;
  r.aggregate = std::numeric_limits<double>::infinity();
  const auto& E = p.entries;
  for (std::size_t i = 0; i < E.size(); ++i) {
    if (E[i].b > c0) continue;
    double best = 0.0;
    for (std::size_t j = 0; j < E.size(); ++j) {
      const double t = E[j].h / E[i].h;
      if (t > 1.0 || t < c0) continue;
      best = std::max(best, E[j].b / E[i].b);
    }
    r.vacuous = false;
    r.h.push_back(E[i].h);
    r.max_ratio.push_back(best);
    r.doubled.push_back(best > 2.0 ? 1 : 0);
    r.aggregate = std::min(r.aggregate, best);
  }
  if (r.vacuous) r.aggregate = 0.0;
  r.envelope_low = std::numeric_limits<double>::infinity();
  r.envelope_high = 0.0;
  for (std::size_t i = 0; i < E.size(); ++i)
    for (std::size_t j = 0; j < E.size(); ++j) {
      if (!(E[i].h < E[j].h)) continue;
      const double ratio = E[i].b / E[j].b;
      r.envelope_low = std::min(r.envelope_low, ratio / std::sqrt(E[i].h / E[j].h));
      r.envelope_high = std::max(r.envelope_high, ratio / std::sqrt(E[j].h / E[i].h));
    }
  if (!std::isfinite(r.envelope_low)) r.envelope_low = 1.0;
  return r;
}

Field slide_field(const Field& u, const Slide2& A, double delta)
{
  const ProblemSpec& spec = *u.grid->spec;
  std::vector<Vec2> chain;
  chain.reserve(spec.domain.size());
  for (const auto& p : spec.domain.boundary) chain.push_back(A.apply(p));
  ConvexDomain dom = domain_from_chain(std::move(chain), spec.domain.anchor);
  const ScalarField f = spec.f;
  auto back = [A](const Vec2& y) { return A.inverse(y); };
  auto moved = std::make_shared<ProblemSpec>(
      make_problem(std::move(dom), [&u, back](const Vec2& y) { return u.evaluate(back(y)); },
                   [f, back](const Vec2& y) { return f(back(y)); }, spec.lambda, spec.Lambda, spec.alpha, spec.M));
  Field F = Field::from_function(discretize(moved, delta, u.grid->width),
                                 [&u, back](const Vec2& y) { return u.evaluate(back(y)); });
  F.f_min = u.f_min;
  F.f_max = u.f_max;
  return F;
}

}  // namespace mongelab
