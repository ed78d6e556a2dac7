#include "mongelab/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

namespace mongelab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Valued {
  Vec2 x;
  double v;
  bool lattice;
};

std::vector<Valued> valued_points(const Field& u)
{
  const Grid& g = *u.grid;
  std::vector<Valued> out;
  out.reserve(g.nodes.size() + g.bpoints.size());
  for (std::size_t i = 0; i < g.nodes.size(); ++i) out.push_back({g.nodes[i], u.u[i], true});
  for (const auto& b : g.bpoints) out.push_back({b.x, b.value, b.lattice >= 0});
  return out;
}

// Least-squares polynomial coefficients in t / scale.
Eigen::VectorXd poly_fit(const std::vector<double>& t, const std::vector<double>& y, int deg, double scale)
{
  Eigen::MatrixXd X(t.size(), deg + 1);
  Eigen::VectorXd b(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    double p = 1.0;
    for (int k = 0; k <= deg; ++k, p *= t[i] / scale) X(i, k) = p;
    b(i) = y[i];
  }
  Eigen::VectorXd c = X.colPivHouseholderQr().solve(b);
  for (int k = 1; k <= deg; ++k) c(k) /= std::pow(scale, k);
  return c;
}

std::vector<std::size_t> chain_near(const Grid& g, const Vec2& x0, double radius)
{
  const std::size_t nb = g.spec->domain.size();
  const std::size_t first = g.bpoints.size() - nb;
  std::vector<std::size_t> idx;
  for (std::size_t s = 0; s < nb; ++s)
    if ((g.bpoints[first + s].x - x0).norm() <= radius) idx.push_back(first + s);
  return idx;
}

}  // namespace

void boundary_frame(const ConvexDomain& dom, const Vec2& x0, Vec2& tangent, Vec2& normal)
{
  const auto hit = dom.nearest(x0);
  const std::size_t n = dom.size();
  std::size_t i = hit.segment;
  if (hit.s > 0.5) i = (i + 1) % n;
  const Vec2 d = dom.vertex(i + 1) - dom.vertex(i + n - 1);
  tangent = d.normalized();
  normal = Vec2(-tangent.y(), tangent.x());
}

TangentPlane tangent_plane(const Field& u, const Vec2& x0)
{
  const Grid& g = *u.grid;
  const ProblemSpec& spec = *g.spec;
  TangentPlane tp;
  boundary_frame(spec.domain, x0, tp.tangent, tp.normal);
  tp.u0 = spec.phi_at(spec.domain.nearest(x0));

  // tangential slope from a cubic fit of the boundary data
  const double rt = 8.0 * g.delta;
  std::vector<double> xi, val;
  for (std::size_t b : chain_near(g, x0, rt)) {
    xi.push_back((g.bpoints[b].x - x0).dot(tp.tangent));
    val.push_back(g.bpoints[b].value);
  }
  if (xi.size() < 4) throw RegularityError("too few boundary samples near the base point");
  tp.tangential_slope = poly_fit(xi, val, 3, rt)(1);

  auto D = [&](double t) {
    return (u.evaluate(x0 + t * tp.normal) - tp.u0) / t;
  };
  const double d2 = D(2 * g.delta), d4 = D(4 * g.delta), d8 = D(8 * g.delta);
  const double R1 = 2 * d2 - d4, R2 = 2 * d4 - d8;
  tp.gamma_richardson = R1;
  tp.gamma_error = std::abs(R1 - R2);

  const auto pts = valued_points(u);
  const double tiny = 1e-3 * g.delta;
  tp.gamma_support = kInf;
  for (const auto& p : pts) {
    const Vec2 d = p.x - x0;
    const double eta = d.dot(tp.normal);
    if (eta <= tiny) continue;
    tp.gamma_support = std::min(tp.gamma_support, (p.v - tp.u0 - tp.tangential_slope * d.dot(tp.tangent)) / eta);
  }
  tp.gamma = std::min(tp.gamma_richardson, tp.gamma_support);
  tp.snapped = tp.gamma_support < tp.gamma_richardson;

  const Vec2 slope = tp.tangential_slope * tp.tangent + tp.gamma * tp.normal;
  tp.l = AffineFunction{tp.u0 - slope.dot(x0), slope};
  tp.support_min = kInf;
  for (const auto& p : pts) tp.support_min = std::min(tp.support_min, p.v - tp.l(p.x));
  const double allowed = 1e-6 * std::max(1.0, u.scale());
  if (tp.support_min < -allowed) {
    std::ostringstream os;
    os << "tangent plane does not support the solution (min u - l = " << tp.support_min
       << "); refine the grid near the base point";
    throw RegularityError(os.str());
  }
  return tp;
}

BoundaryExpansion boundary_expansion(const Field& u, const Vec2& x0, double radius)
{
  const Grid& g = *u.grid;
  Vec2 t, n;
  boundary_frame(g.spec->domain, x0, t, n);
  std::vector<double> xi, val, eta;
  for (std::size_t b : chain_near(g, x0, radius)) {
    const Vec2 d = g.bpoints[b].x - x0;
    xi.push_back(d.dot(t));
    eta.push_back(d.dot(n));
    val.push_back(g.bpoints[b].value);
  }
  if (xi.size() < 5) throw RegularityError("too few boundary samples for the boundary expansion");
  BoundaryExpansion e;
  Eigen::VectorXd c = poly_fit(xi, val, 3, radius);
  e.phi0 = c(0);
  e.slope = c(1);
  e.phi2 = 2 * c(2);
  Eigen::VectorXd k = poly_fit(xi, eta, 3, radius);
  e.kappa = 2 * k(2);
  return e;
}

FitResult fit_quadratic(const Field& u, const Vec2& x0, double r, FitConstraint c)
{
  const Grid& g = *u.grid;
  Vec2 tau, nrm;
  boundary_frame(g.spec->domain, x0, tau, nrm);
  const double u0 = g.spec->phi_at(g.spec->domain.nearest(x0));

  std::vector<Valued> pts;
  int nodes = 0;
  for (const auto& p : valued_points(u)) {
    if ((p.x - x0).norm() > r) continue;
    pts.push_back(p);
    if (p.lattice) ++nodes;
  }
  if (nodes < 30) {
    std::ostringstream os;
    os << "fit radius " << r << " holds " << nodes << " nodes, need at least 30";
    throw RegularityError(os.str());
  }

  BoundaryExpansion be;
  if (c == FitConstraint::BoundaryMatched) be = boundary_expansion(u, x0, std::max(r, 8.0 * g.delta));

  const int P = c == FitConstraint::Free ? 5 : 3;
  const int m = int(pts.size());
  Eigen::MatrixXd X(m, P);
  Eigen::VectorXd y(m);
  for (int i = 0; i < m; ++i) {
    const Vec2 d = pts[i].x - x0;
    const double s = d.dot(tau) / r, e = d.dot(nrm) / r;
    if (c == FitConstraint::Free) {
      X.row(i) << s, e, 0.5 * s * s, s * e, 0.5 * e * e;
      y(i) = pts[i].v - u0;
    } else {
      const double S = d.dot(tau);
      X.row(i) << e - 0.5 * be.kappa * S * S / r, s * e, 0.5 * e * e;
      y(i) = pts[i].v - u0 - be.slope * S - 0.5 * be.phi2 * S * S;
    }
  }

  auto solve = [&](const Eigen::VectorXd& w) {
    Eigen::MatrixXd Xw = w.asDiagonal() * X;
    Eigen::VectorXd yw = w.cwiseProduct(y);
    return Eigen::VectorXd(Xw.colPivHouseholderQr().solve(yw));
  };
  Eigen::VectorXd w = Eigen::VectorXd::Ones(m);
  Eigen::VectorXd best = solve(w);
  double best_sup = (X * best - y).cwiseAbs().maxCoeff();
  Eigen::VectorXd theta = best;
  // Lawson iteration toward the minimax fit
  Eigen::VectorXd lw = Eigen::VectorXd::Constant(m, 1.0 / m);
  for (int it = 0; it < 100; ++it) {
    Eigen::VectorXd res = (X * theta - y).cwiseAbs();
    lw = lw.cwiseProduct(res);
    const double sum = lw.sum();
    if (!(sum > 0)) break;
    lw /= sum;
    theta = solve(lw.cwiseSqrt());
    const double sup = (X * theta - y).cwiseAbs().maxCoeff();
    if (sup < best_sup) {
      best_sup = sup;
      best = theta;
    }
  }

  double a, gamma, H11, H12, H22;
  if (c == FitConstraint::Free) {
    a = best(0) / r;
    gamma = best(1) / r;
    H11 = best(2) / (r * r);
    H12 = best(3) / (r * r);
    H22 = best(4) / (r * r);
  } else {
    a = be.slope;
    gamma = best(0) / r;
    H12 = best(1) / (r * r);
    H22 = best(2) / (r * r);
    H11 = be.phi2 - gamma * be.kappa;
  }
  Mat2 R;
  R.col(0) = tau;
  R.col(1) = nrm;
  Mat2 Hl;
  Hl << H11, H12, H12, H22;

  FitResult fr;
  fr.model.x0 = x0;
  fr.model.u0 = u0;
  fr.model.p = a * tau + gamma * nrm;
  fr.model.H = R * Hl * R.transpose();
  fr.model.H(1, 0) = fr.model.H(0, 1);
  fr.residual = best_sup;
  fr.points = m;
  fr.nodes = nodes;
  return fr;
}

std::vector<double> radius_ladder(double r0, int m_from, int m_to)
{
  std::vector<double> l;
  for (int m = m_from; m <= m_to; ++m) l.push_back(std::pow(r0, m));
  return l;
}

RegularityReport c2alpha_exponent(const Field& u, const Vec2& x0, const std::vector<double>& r_ladder,
                                  FitConstraint c)
{
  RegularityReport rep;
  rep.x0 = x0;
  rep.constraint = c == FitConstraint::Free ? "free" : "boundary-matched";
  std::vector<double> dropped;
  for (double r : r_ladder) {
    FitResult fr;
    try {
      fr = fit_quadratic(u, x0, r, c);
    } catch (const RegularityError&) {
      dropped.push_back(r);
      continue;
    }
    rep.scales.push_back({r, fr.residual, fr.model.gamma(), fr.model.H, fr.nodes});
  }
  if (rep.scales.size() < 5) {
    std::ostringstream os;
    os << "only " << rep.scales.size() << " resolvable scales, need at least 5; refine the grid";
    throw RegularityError(os.str());
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = double(rep.scales.size());
  for (const auto& s : rep.scales) {
    const double x = std::log(s.r), yv = std::log(std::max(s.R, 1e-300));
    sx += x;
    sy += yv;
    sxx += x * x;
    sxy += x * yv;
  }
  rep.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  rep.alpha_est = rep.slope - 2.0;
  rep.C_est = std::exp((sy - rep.slope * sx) / n);
  for (std::size_t i = 1; i < rep.scales.size(); ++i) {
    rep.gamma_drift.push_back(std::abs(rep.scales[i].gamma - rep.scales[i - 1].gamma));
    rep.hessian_drift.push_back((rep.scales[i].H - rep.scales[i - 1].H).norm());
    if (rep.scales[i].R > 1.1 * rep.scales[i - 1].R) rep.low_confidence = true;
  }
  std::ostringstream notes;
  if (!dropped.empty()) {
    notes << "dropped " << dropped.size() << " unresolved scale(s)";
  }
  if (rep.low_confidence) notes << (dropped.empty() ? "" : "; ") << "residual not monotone";
  rep.notes = notes.str();
  return rep;
}

std::string RegularityReport::to_text() const
{
  std::ostringstream os;
  char buf[512];
  std::snprintf(buf, sizeof buf, "x0: %.17g %.17g\n", x0.x(), x0.y());
  os << buf << "constraint: " << constraint << "\n";
  os << "scales: " << scales.size() << "\n";
  std::snprintf(buf, sizeof buf, "slope: %.17g\nalpha_est: %.17g\nC_est: %.17g\n", slope, alpha_est, C_est);
  os << buf;
  os << "low_confidence: " << (low_confidence ? "true" : "false") << "\n";
  os << "notes: " << notes << "\n";
  os << "\nr,R,gamma,H11,H12,H22,nodes,gamma_drift,hessian_drift\n";
  for (std::size_t i = 0; i < scales.size(); ++i) {
    const auto& s = scales[i];
    const double gd = i ? gamma_drift[i - 1] : 0.0, hd = i ? hessian_drift[i - 1] : 0.0;
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%.17g,%.17g\n", s.r, s.R, s.gamma,
                  s.H(0, 0), s.H(0, 1), s.H(1, 1), s.nodes, gd, hd);
    os << buf;
  }
  return os.str();
}

RescaledField rescale_section(const Field& u, const Vec2& x0, double h, double new_delta)
{
  const Grid& g = *u.grid;
  const ProblemSpec& spec = *g.spec;
  TangentPlane tp = tangent_plane(u, x0);
  if (std::abs(tp.normal.x()) > 1e-9) throw RegularityError("rescaling needs the inner normal e_n at the base point");
  Section S = section(u, x0, h, tp.l);
  Localization L = localization_constants(S, spec.domain);

  RescaledField out;
  out.h = h;
  out.A = Slide2(L.nu);
  const Slide2 A = out.A;
  const double sq = std::sqrt(h);
  auto fwd = [&](const Vec2& x) -> Vec2 { return A.apply(x - x0) / sq; };
  auto back = [=](const Vec2& y) -> Vec2 { return x0 + A.inverse(sq * y); };

  std::vector<Vec2> hullT;
  for (const auto& v : S.hull) hullT.push_back(fwd(v));
  Vec2 lo = hullT[0], hi = hullT[0];
  for (const auto& v : hullT) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  const Vec2 ext = hi - lo;
  lo -= 0.25 * ext;
  hi += 0.25 * ext;

  std::vector<Vec2> chainT;
  for (const auto& b : spec.domain.boundary) chainT.push_back(fwd(b));
  std::vector<Vec2> poly = geom::convex_hull(chainT);
  poly = geom::clip_halfplane(poly, Vec2(1, 0), hi.x());
  poly = geom::clip_halfplane(poly, Vec2(-1, 0), -lo.x());
  poly = geom::clip_halfplane(poly, Vec2(0, 1), hi.y());
  poly = geom::clip_halfplane(poly, Vec2(0, -1), -lo.y());
  poly = geom::convex_hull(poly);

  DomainDescription desc;
  desc.kind = DomainDescription::Kind::Polygon;
  desc.vertices = poly;
  desc.anchor = Vec2::Zero();
  double per = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) per += (poly[(i + 1) % poly.size()] - poly[i]).norm();
  desc.samples = std::max<std::size_t>(512, std::size_t(4.0 * per / new_delta));
  ConvexDomain dom = make_domain(desc);

  const AffineFunction l = tp.l;
  const Field* src = &u;
  auto uh = [src, back, l, h](const Vec2& y) {
    const Vec2 x = back(y);
    return (src->evaluate(x) - l(x)) / h;
  };
  const ScalarField f0 = spec.f;
  auto fh = [f0, back](const Vec2& y) { return f0(back(y)); };

  auto sp = std::make_shared<ProblemSpec>(make_problem(dom, uh, fh, spec.lambda, spec.Lambda, spec.alpha, spec.M));
  sp->x0 = Vec2::Zero();
  out.spec = sp;
  auto grid = discretize(sp, new_delta, g.width);
  out.field = Field::from_function(grid, uh);

  double kmax = 0.0;
  for (const auto& v : hullT) kmax = std::max(kmax, v.norm());
  out.k_out = kmax;
  Ellipse ball;
  ball.center = Vec2::Zero();
  ball.Q = Mat2::Identity();
  out.k_in = inner_inclusion_constant(ball, hullT, dom, kmax);
  out.k = std::min(out.k_in, 1.0 / out.k_out);

  const double f00 = fh(Vec2::Zero());
  out.sigma = 0.0;
  for (const auto& y : grid->nodes) {
    const double ny = y.norm();
    if (ny > 0) out.sigma = std::max(out.sigma, std::abs(fh(y) - f00) / std::pow(ny, spec.alpha));
  }
  return out;
}

Mat2 discrete_hessian(const Field& u, int node)
{
  const double d0 = second_difference(u, node, 0), d1 = second_difference(u, node, 1);
  const double d2 = second_difference(u, node, 2), d3 = second_difference(u, node, 3);
  Mat2 H;
  H << d0, 0.5 * (d2 - d3), 0.5 * (d2 - d3), d1;
  return H;
}

PogorelovStats pogorelov_region_bounds(const Field& u, double k, double c0, bool check_scenario)
{
  const Grid& g = *u.grid;
  const ProblemSpec& spec = *g.spec;
  PogorelovStats st;
  st.k = k;
  st.c0 = c0 > 0 ? c0 : 0.25 * k;

  if (check_scenario) {
    const ConvexDomain& dom = spec.domain;
    std::ostringstream why;
    if (!(k > 0 && k < 1)) why << "k must lie in (0, 1); ";
    double ymin = kInf;
    for (const auto& b : dom.boundary) ymin = std::min(ymin, b.y());
    if (ymin < -1e-10) why << "domain leaves the upper half-plane; ";
    if (dom.r_out > 1.0 / k + 1e-10) why << "domain not inside the half-ball of radius 1/k; ";
    for (int a = 0; a <= 180; ++a) {
      const double th = std::numbers::pi * a / 180.0;
      if (!dom.contains(k * Vec2(std::cos(th), std::sin(th)), 1e-10)) {
        why << "half-ball of radius k not inside the domain; ";
        break;
      }
    }
    if (u.f.size() && (std::abs(u.f_min - 1.0) > 1e-12 || std::abs(u.f_max - 1.0) > 1e-12))
      why << "right-hand side is not identically 1; ";
    SeparationResult sep = quadratic_separation(spec, AffineFunction{});
    if (!sep.success) why << "boundary data not quadratically pinched on the flat part (" << sep.message << "); ";
    if (!why.str().empty()) {
      st.message = "inapplicable: " + why.str();
      st.message.erase(st.message.size() - 2);
      return st;
    }
  }
  st.applicable = true;

  const double level = k * k / 16.0, top = k * k / 4.0;
  st.eig_min = kInf;
  st.eig_max = -kInf;
  st.functional_max = -kInf;
  int arg = -1;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const double ui = u.u[i];
    if (ui >= top) continue;
    const Mat2 H = discrete_hessian(u, int(i));
    if (ui < level) {
      ++st.region_nodes;
      Eigen::SelfAdjointEigenSolver<Mat2> es(H);
      st.eig_min = std::min(st.eig_min, es.eigenvalues()(0));
      st.eig_max = std::max(st.eig_max, es.eigenvalues()(1));
    }
    if (!(H(0, 0) > 0)) continue;
    const Arm& af = g.arm(int(i), 0, 0);
    const Arm& ab = g.arm(int(i), 0, 1);
    const double tf = af.frac, tb = ab.frac;
    const double u1 = ((u.arm_value(af) - ui) * tb / tf - (u.arm_value(ab) - ui) * tf / tb) / ((tf + tb) * g.delta);
    const double F = std::log(top - ui) + std::log(H(0, 0)) + 0.5 * u1 * u1;
    if (F > st.functional_max) {
      st.functional_max = F;
      arg = int(i);
    }
  }
  if (st.region_nodes == 0) {
    st.applicable = false;
    st.message = "inapplicable: no nodes in the region";
    return st;
  }
  if (arg >= 0) {
    const Vec2 x = g.nodes[arg];
    st.functional_argmax = x;
    st.functional_interior = g.boundary_distance(x) > 2.0 * g.delta;
    st.functional_closed_form = std::log(top - 0.5 * x.squaredNorm()) + 0.5 * x.x() * x.x();
  }

  // centered five-point third differences on B+_{c0}
  auto val = [&](int i, int j) -> double {
    if (i < 0 || j < 0 || i >= g.nx || j >= g.ny) return std::numeric_limits<double>::quiet_NaN();
    const int un = g.unknown_of[j * g.nx + i];
    return un >= 0 ? u.u[un] : std::numeric_limits<double>::quiet_NaN();
  };
  const double d3 = g.delta * g.delta * g.delta;
  for (std::size_t n = 0; n < g.nodes.size(); ++n) {
    if (g.nodes[n].norm() >= st.c0) continue;
    const int lat = g.lattice_of[n];
    const int i = lat % g.nx, j = lat / g.nx;
    const double t111 = (val(i + 2, j) - 2 * val(i + 1, j) + 2 * val(i - 1, j) - val(i - 2, j)) / (2 * d3);
    const double t222 = (val(i, j + 2) - 2 * val(i, j + 1) + 2 * val(i, j - 1) - val(i, j - 2)) / (2 * d3);
    const double t112 = ((val(i + 1, j + 1) - 2 * val(i, j + 1) + val(i - 1, j + 1)) -
                         (val(i + 1, j - 1) - 2 * val(i, j - 1) + val(i - 1, j - 1))) /
                        (2 * d3);
    const double t122 = ((val(i + 1, j + 1) - 2 * val(i + 1, j) + val(i + 1, j - 1)) -
                         (val(i - 1, j + 1) - 2 * val(i - 1, j) + val(i - 1, j - 1))) /
                        (2 * d3);
    const double m = std::max({std::abs(t111), std::abs(t222), std::abs(t112), std::abs(t122)});
    if (!std::isfinite(m)) continue;
    ++st.third_nodes;
    st.third_max = std::max(st.third_max, m);
  }
  st.message = "ok";
  return st;
}

DetPerturbation det_perturbation_bound(const Mat2& A, double a)
{
  DetPerturbation d;
  if (!(a >= 0) || (A - A.transpose()).cwiseAbs().maxCoeff() > 0) return d;
  Eigen::SelfAdjointEigenSolver<Mat2> es(A);
  const double det = A.determinant();
  if (es.eigenvalues()(0) < 0 || det < 0.5 || det > 2.0) return d;
  d.applicable = true;
  d.lhs = (A + a * Mat2::Identity()).determinant();
  d.rhs = det + a / 4.0;
  d.holds = d.lhs >= d.rhs;
  return d;
}

}  // namespace mongelab
