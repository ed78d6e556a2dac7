#include "mongelab/barriers.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

namespace mongelab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double get(const std::map<std::string, double>& p, const std::string& key, double fallback)
{
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

double require(const std::map<std::string, double>& p, const std::string& key, const char* name)
{
  auto it = p.find(key);
  if (it == p.end()) throw BarrierError(std::string(name) + ": missing parameter '" + key + "'");
  return it->second;
}

Mat2 radial_hessian(double beta, double c, const Vec2& z)
{
  const double r = z.norm();
  const Vec2 e = z / r;
  const double d1 = c * beta * std::pow(r, -beta - 1.0);
  const double d2 = -c * beta * (beta + 1.0) * std::pow(r, -beta - 2.0);
  return d2 * e * e.transpose() + (d1 / r) * (Mat2::Identity() - e * e.transpose());
}

double f_at(const Field& u, int i)
{
  if (u.f.size() == Eigen::Index(u.grid->nodes.size())) return u.f[i];
  return u.grid->spec->f(u.grid->nodes[i]);
}

// MA_h of a closed-form function at an unknown.
double scheme_value(const Grid& g, const std::function<double(const Vec2&)>& b, int i)
{
  const double b0 = b(g.nodes[i]);
  std::vector<double> D(g.dirs.size());
  for (int k = 0; k < g.K(); ++k) {
    const double s = g.step(k);
    const double tf = g.arm(i, k, 0).frac, tb = g.arm(i, k, 1).frac;
    const double bf = b(g.arm_point(i, k, 0)), bb = b(g.arm_point(i, k, 1));
    D[k] = 2.0 / (s * s) * ((bf - b0) / (tf * (tf + tb)) + (bb - b0) / (tb * (tf + tb)));
  }
  double ma = kInf;
  for (const auto& pr : g.pairs) ma = std::min(ma, std::max(D[pr[0]], 0.0) * std::max(D[pr[1]], 0.0));
  return ma;
}

bool is_mixed(const Barrier& b) { return b.kind == BarrierKind::PogorelovMixedV; }

// D_i u at a boundary point: lattice stencil when the point is a lattice node,
// otherwise a central difference of the interpolant.
double point_derivative(const Field& u, const Vec2& x, int component)
{
  const Grid& g = *u.grid;
  const double fi = x.x() / g.delta, fj = x.y() / g.delta;
  const long ri = std::lround(fi), rj = std::lround(fj);
  if (std::abs(fi - ri) < 1e-9 && std::abs(fj - rj) < 1e-9) {
    const int i = int(ri) - g.i0, j = int(rj) - g.j0;
    if (i >= 0 && j >= 0 && i < g.nx && j < g.ny) {
      const double d = lattice_derivative(u, j * g.nx + i, component);
      if (std::isfinite(d)) return d;
    }
  }
  const Vec2 e = component == 0 ? Vec2(g.delta, 0) : Vec2(0, g.delta);
  const ConvexDomain& dom = g.spec->domain;
  if (!dom.contains(x + e, 1e-12) || !dom.contains(x - e, 1e-12)) return kNaN;
  return (u.evaluate(x + e) - u.evaluate(x - e)) / (2.0 * g.delta);
}

}  // namespace

const char* to_string(BarrierKind k)
{
  switch (k) {
    case BarrierKind::TwLowerV: return "TW-lower-v";
    case BarrierKind::TwUpperW: return "TW-upper-w";
    case BarrierKind::PogorelovW: return "pogorelov-w";
    case BarrierKind::PogorelovMixedV: return "pogorelov-mixed-v";
    case BarrierKind::RadialPhi: return "radial-phi";
    default: return "phi-y";
  }
}

BarrierKind barrier_kind(const std::string& name)
{
  for (auto k : {BarrierKind::TwLowerV, BarrierKind::TwUpperW, BarrierKind::PogorelovW,
                 BarrierKind::PogorelovMixedV, BarrierKind::RadialPhi, BarrierKind::PhiY})
    if (name == to_string(k)) return k;
  throw BarrierError("unknown barrier '" + name + "'");
}

double radial_c(double beta) { return 1.0 / (std::pow(4.0, beta) - std::pow(2.0, beta)); }

Vec2 radial_eigenvalues(double beta, double r)
{
  const double c = radial_c(beta);
  return {-c * beta * (beta + 1.0) * std::pow(r, -beta - 2.0), c * beta * std::pow(r, -beta - 2.0)};
}

RadialTrace radial_trace(double beta, double C0)
{
  RadialTrace t;
  t.beta = beta;
  t.a_min = 1.0 / (2.0 * C0);
  t.a_max = 2.0 * C0;
  t.worst_trace = -kInf;
  for (int s = 0; s <= 64; ++s) {
    const double r = 0.25 + 0.25 * s / 64.0;
    const Vec2 ev = radial_eigenvalues(beta, r);
    for (double ar : {t.a_min, t.a_max})
      for (double at : {t.a_min, t.a_max}) t.worst_trace = std::max(t.worst_trace, ar * ev(0) + at * ev(1));
  }
  t.eta0 = -t.worst_trace;
  return t;
}

RadialTrace choose_beta(double C0)
{
  if (!(C0 > 0)) throw BarrierError("radial-phi: C0 must be positive");
  const double m = 1.0 / (2.0 * C0), M = 2.0 * C0;
  double a = std::max(M / m - 1.0, 1e-6), b = a + 60.0;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  auto eta = [&](double beta) { return radial_trace(beta, C0).eta0; };
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = eta(x1), f2 = eta(x2);
  for (int it = 0; it < 80; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = eta(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = eta(x1);
    }
  }
  return radial_trace(0.5 * (a + b), C0);
}

double Barrier::operator()(const Vec2& x) const
{
  const Vec2 d = x - center;
  double v = shift + affine(x) + 0.5 * d.dot(H * d) + lin * d.y();
  if (has_radial()) v += scale * c_beta * (std::pow(4.0, beta) - std::pow((x - y).norm(), -beta));
  return v;
}

Mat2 Barrier::hessian(const Vec2& x) const
{
  Mat2 h = H;
  if (has_radial()) h += scale * radial_hessian(beta, c_beta, x - y);
  return h;
}

double Barrier::det(const Vec2& x) const
{
  if (is_mixed(*this)) return H.determinant() / (gamma1 * gamma1);
  if (!has_radial()) return H.determinant();
  // H + s (a e e^T + b (I - e e^T)) in closed form
  const Vec2 z = x - y;
  const double r = z.norm();
  const Vec2 e = z / r;
  const Vec2 ev = radial_eigenvalues(beta, r);
  const double a = scale * ev(0), b = scale * ev(1);
  const Vec2 t(-e.y(), e.x());
  const double hee = e.dot(H * e), htt = t.dot(H * t), het = e.dot(H * t);
  return (hee + a) * (htt + b) - het * het;
}

bool Barrier::valid_at(const Vec2& x) const
{
  if (!has_radial()) return true;
  const double r = (x - y).norm();
  return r >= r_in * (1.0 - 1e-12) && r <= r_out * (1.0 + 1e-12);
}

Barrier Barrier::lowered(double eps) const
{
  Barrier b = *this;
  if (side == BarrierSide::Lower) b.shift -= eps;
  else b.shift += eps;
  b.params["lowered_by"] = get(params, "lowered_by", 0.0) + eps;
  b.anchored = false;
  return b;
}

Barrier barrier_catalog(const std::string& name, const std::map<std::string, double>& p)
{
  Barrier b;
  b.kind = barrier_kind(name);
  b.params = p;
  b.affine = {get(p, "l_c", 0.0), Vec2(get(p, "l_p1", 0.0), get(p, "l_p2", 0.0))};
  b.shift = get(p, "shift", 0.0);
  const char* nm = to_string(b.kind);
  switch (b.kind) {
    case BarrierKind::TwLowerV: {
      // mu |x'|^2 + Lambda / mu x_n^2 - C x_n
      const double mu = require(p, "mu", nm), Lambda = require(p, "Lambda", nm), C = require(p, "C", nm);
      if (!(mu > 0) || !(Lambda > 0) || C < 0) throw BarrierError("TW-lower-v: need mu > 0, Lambda > 0, C >= 0");
      b.H = Vec2(2.0 * mu, 2.0 * Lambda / mu).asDiagonal();
      b.lin = -C;
      b.anchored = true;
      break;
    }
    case BarrierKind::TwUpperW: {
      // eps x_n + h/2 (x'/(C1 h^(a/2)))^2 + Lambda C1^2 h (x_n/h^a)^2, a = n/(n+1)
      const double h = require(p, "h", nm), C1 = require(p, "C1", nm), eps = get(p, "eps", 0.0);
      const double Lambda = require(p, "Lambda", nm);
      if (!(h > 0 && h < 1) || !(C1 > 0) || !(Lambda > 0) || eps < 0)
        throw BarrierError("TW-upper-w: need 0 < h < 1, C1 > 0, Lambda > 0, eps >= 0");
      const double a = 2.0 / 3.0;
      b.H = Vec2(std::pow(h, 1.0 - a) / (C1 * C1), 2.0 * Lambda * C1 * C1 * std::pow(h, 1.0 - 2.0 * a)).asDiagonal();
      b.lin = eps;
      b.shift = -get(p, "shift", 0.0);
      break;
    }
    case BarrierKind::PogorelovW: {
      // u0 + s0 (x1 - a) + delta (x1 - a)^2 + delta^-1 (x_n^2 - x_n / k)
      const double a = get(p, "x0", 0.0), delta = require(p, "delta", nm), k = require(p, "k", nm);
      if (!(delta > 0 && delta < 1)) throw BarrierError("pogorelov-w: delta must lie in (0, 1)");
      if (!(k > 0)) throw BarrierError("pogorelov-w: k must be positive");
      const double u0 = get(p, "u0", 0.5 * a * a), s0 = get(p, "s0", a);
      b.center = Vec2(a, 0.0);
      b.H = Vec2(2.0 * delta, 2.0 / delta).asDiagonal();
      b.lin = -1.0 / (delta * k);
      b.affine = {u0 - s0 * a, Vec2(s0, 0.0)};
      b.anchored = true;
      b.anchor = b.center;
      break;
    }
    case BarrierKind::PogorelovMixedV: {
      // a0 + a1 (x_i - x0_i) + g1 [delta |x' - x0|^2 + delta^-1 (x_n^2 - g2 x_n) - (u - l)]
      const double a = get(p, "x0", 0.0), delta = get(p, "delta", 0.25);
      const double g1 = require(p, "gamma1", nm), g2 = require(p, "gamma2", nm);
      if (!(delta > 0 && delta < 1)) throw BarrierError("pogorelov-mixed-v: delta must lie in (0, 1)");
      if (!(g1 > 0) || g2 < 0) throw BarrierError("pogorelov-mixed-v: need gamma1 > 0, gamma2 >= 0");
      b.component = int(get(p, "component", 0.0));
      if (b.component != 0) throw BarrierError("pogorelov-mixed-v: only the tangential component 0 exists in 2D");
      const double a0 = get(p, "a0", a), a1 = get(p, "a1", 1.0);
      b.center = Vec2(a, 0.0);
      b.gamma1 = g1;
      b.H = g1 * Vec2(2.0 * delta, 2.0 / delta).asDiagonal().toDenseMatrix();
      b.lin = -g1 * g2 / delta;
      b.affine = {a0 - a1 * a, Vec2(a1, 0.0)};
      b.l_ref = {get(p, "ref_c", 0.0), Vec2(get(p, "ref_p1", 0.0), get(p, "ref_p2", 0.0))};
      b.anchored = true;
      b.anchor = b.center;
      break;
    }
    case BarrierKind::RadialPhi:
    case BarrierKind::PhiY: {
      double beta = get(p, "beta", 0.0);
      if (!(beta > 0)) beta = choose_beta(get(p, "C0", 1.0)).beta;
      b.beta = beta;
      b.c_beta = radial_c(beta);
      b.params["beta"] = beta;
      b.y = Vec2(get(p, "y1", 0.0), get(p, "y2", -0.25));
      b.r_in = 0.25;
      b.r_out = 0.5;
      b.side = BarrierSide::Upper;
      if (b.kind == BarrierKind::RadialPhi) {
        b.scale = get(p, "scale", 1.0);
        if (!(b.scale > 0)) throw BarrierError("radial-phi: scale must be positive");
      } else {
        // P_m + eps (C1 delta + phi(x - y))
        const double eps = require(p, "eps", nm), C1 = get(p, "C1", 0.0), d0 = get(p, "delta", 1.0);
        if (!(eps > 0 && eps <= 1)) throw BarrierError("phi-y: eps must lie in (0, 1]");
        if (C1 < 0 || d0 < 0) throw BarrierError("phi-y: C1 and delta must be nonnegative");
        Mat2 P;
        P << get(p, "p11", 1.0), get(p, "p12", 0.0), get(p, "p12", 0.0), get(p, "p22", 1.0);
        b.H = P;
        b.scale = eps;
        b.shift += eps * C1 * d0;
      }
      break;
    }
  }
  return b;
}

FdCheck fd_determinant_check(const Barrier& b, const Vec2& lo, const Vec2& hi, int samples, unsigned seed)
{
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> ux(lo.x(), hi.x()), uy(lo.y(), hi.y());
  const double h = 1e-4;
  auto d2 = [&](const Vec2& x, const Vec2& e) {
    return (-b(x + 2 * h * e) + 16 * b(x + h * e) - 30 * b(x) + 16 * b(x - h * e) - b(x - 2 * h * e)) /
           (12 * h * h);
  };
  FdCheck out;
  for (int tries = 0; out.samples < samples && tries < 1000 * samples; ++tries) {
    const Vec2 x(ux(rng), uy(rng));
    if (!b.valid_at(x) || (b.has_radial() && (!b.valid_at(x + 2 * h * Vec2::Ones()) || !b.valid_at(x - 2 * h * Vec2::Ones()))))
      continue;
    const double hxx = d2(x, Vec2(1, 0)), hyy = d2(x, Vec2(0, 1));
    const double hxy = 0.5 * (d2(x, Vec2(1, 1) / std::sqrt(2.0)) - d2(x, Vec2(1, -1) / std::sqrt(2.0)));
    double det_fd = hxx * hyy - hxy * hxy;
    if (is_mixed(b)) det_fd /= b.gamma1 * b.gamma1;
    const double ref = b.det(x);
    // relative to the determinant scale |H|^2 / 2, so sign changes of det stay well posed
    Mat2 hb = b.hessian(x);
    if (is_mixed(b)) hb /= b.gamma1;
    const double err = std::abs(det_fd - ref) / std::max({std::abs(ref), 0.5 * hb.squaredNorm(), 1e-300});
    if (err > out.max_rel_error) {
      out.max_rel_error = err;
      out.worst = x;
    }
    ++out.samples;
  }
  return out;
}

bool CertRegion::contains(const Vec2& x, double u) const
{
  if (x.y() > max_xn) return false;
  if (!(u - l(x) < sublevel)) return false;
  const double r = (x - annulus_center).norm();
  return r >= annulus_in && r <= annulus_out;
}

double lattice_derivative(const Field& u, int lat, int component)
{
  const Grid& g = *u.grid;
  const int ui = g.unknown_of[lat];
  if (ui >= 0) {
    const Arm& af = g.arm(ui, component, 0);
    const Arm& ab = g.arm(ui, component, 1);
    const double s = g.step(component), tf = af.frac, tb = ab.frac;
    const double u0 = u.u[ui], uf = u.arm_value(af), ub = u.arm_value(ab);
    return (tb * tb * (uf - u0) - tf * tf * (ub - u0)) / (s * tf * tb * (tf + tb));
  }
  if (g.bpoint_of[lat] < 0) return kNaN;
  const int i = lat % g.nx, j = lat / g.nx;
  const int di = component == 0 ? 1 : 0, dj = component == 1 ? 1 : 0;
  const int i1 = i + di, j1 = j + dj, i2 = i - di, j2 = j - dj;
  if (i1 >= g.nx || j1 >= g.ny || i2 < 0 || j2 < 0) return kNaN;
  const double vf = u.lattice_value(j1 * g.nx + i1), vb = u.lattice_value(j2 * g.nx + i2);
  if (!std::isfinite(vf) || !std::isfinite(vb)) return kNaN;
  return (vf - vb) / (2.0 * g.delta);
}

Certificate certify_lower_bound(const Barrier& b, const Field& u, const CertRegion& region)
{
  const Grid& g = *u.grid;
  Certificate c;
  c.name = to_string(b.kind);
  c.side = b.side == BarrierSide::Lower ? "lower" : "upper";
  c.params = b.params;
  c.region = region.name;
  c.tolerance = 10.0 * 1e-9 * std::max(1.0, u.f_max);
  const bool mixed = is_mixed(b);

  auto value_at = [&](const Vec2& x, double uval) {
    double v = b(x);
    if (mixed) v -= b.gamma1 * (uval - b.l_ref(x));
    return v;
  };
  // signed domination gap: >= 0 when the comparison holds
  auto gap = [&](double target, double bv) { return b.side == BarrierSide::Lower ? target - bv : bv - target; };

  std::vector<int> inside;
  std::vector<char> in_region(g.nodes.size(), 0);
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    if (region.contains(g.nodes[i], u.u[i]) && b.valid_at(g.nodes[i])) {
      in_region[i] = 1;
      inside.push_back(int(i));
    }
  c.region_nodes = int(inside.size());
  if (inside.empty()) {
    c.message = "region contains no grid nodes";
    return c;
  }

  // discrete boundary: arm endpoints outside the region
  std::set<int> bnodes, bpts;
  for (int i : inside)
    for (int k = 0; k < g.K(); ++k)
      for (int side = 0; side < 2; ++side) {
        const Arm& a = g.arm(i, k, side);
        if (a.node >= 0) {
          if (!in_region[a.node]) bnodes.insert(a.node);
        } else {
          bpts.insert(a.bpoint);
        }
      }
  c.boundary_nodes = int(bnodes.size() + bpts.size());

  c.boundary_margin = kInf;
  c.anchor_gap = kNaN;
  auto visit = [&](const Vec2& x, double uval, double target) {
    if (!std::isfinite(target)) return false;
    const double gp = gap(target, value_at(x, uval));
    if (b.anchored && (x - b.anchor).norm() < 1e-9) {
      c.anchor_gap = gp;
      return true;
    }
    if (gp < c.boundary_margin) {
      c.boundary_margin = gp;
      c.worst_boundary = x;
    }
    return true;
  };
  for (int n : bnodes) {
    const double target = mixed ? lattice_derivative(u, g.lattice_of[n], b.component) : u.u[n];
    if (!visit(g.nodes[n], u.u[n], target)) {
      c.message = "derivative unavailable at boundary node";
      c.worst_boundary = g.nodes[n];
      return c;
    }
  }
  for (int p : bpts) {
    const BoundaryPoint& bp = g.bpoints[p];
    const double target = mixed ? point_derivative(u, bp.x, b.component) : bp.value;
    if (!visit(bp.x, bp.value, target)) {
      c.message = "derivative unavailable at boundary point";
      c.worst_boundary = bp.x;
      return c;
    }
  }

  // determinant margins, analytic and discrete
  c.det_margin = kInf;
  c.discrete_margin = kInf;
  std::function<double(const Vec2&)> fb = [&](const Vec2& x) { return b(x); };
  for (int i : inside) {
    const double f = f_at(u, i);
    const Vec2& x = g.nodes[i];
    if (mixed) {
      // L_h v = gamma1 (tr(H_u^-1 D^2 P) - 2) >= 0
      c.det_margin = std::min(c.det_margin, b.det(x) - f);
      const Mat2 Hu = discrete_hessian(u, i);
      const double lv = Hu.determinant() > 0 ? (Hu.inverse() * (b.H / b.gamma1)).trace() - 2.0 : -kInf;
      c.discrete_margin = std::min(c.discrete_margin, lv);
    } else if (b.side == BarrierSide::Lower) {
      c.det_margin = std::min(c.det_margin, b.det(x) - f);
      c.discrete_margin = std::min(c.discrete_margin, scheme_value(g, fb, i) - f);
    } else {
      c.det_margin = std::min(c.det_margin, f - b.det(x));
      c.discrete_margin = std::min(c.discrete_margin, f - scheme_value(g, fb, i));
    }
  }

  std::ostringstream msg;
  if (!(c.det_margin > 0)) {
    msg << "determinant precondition fails (margin " << c.det_margin << ")";
    c.message = msg.str();
    return c;
  }
  if (!(c.discrete_margin > 0)) {
    msg << "discrete scheme precondition fails (margin " << c.discrete_margin << ")";
    c.message = msg.str();
    return c;
  }
  if (!(c.boundary_margin > 0) || (b.anchored && std::isfinite(c.anchor_gap) && c.anchor_gap < -c.tolerance)) {
    msg << "boundary domination fails at (" << c.worst_boundary.x() << ", " << c.worst_boundary.y()
        << ") with gap " << c.boundary_margin;
    c.message = msg.str();
    return c;
  }

  c.interior_violation = 0.0;
  for (int i : inside) {
    const double target = mixed ? lattice_derivative(u, g.lattice_of[i], b.component) : u.u[i];
    c.interior_violation = std::max(c.interior_violation, -gap(target, value_at(g.nodes[i], u.u[i])));
  }
  c.verdict = c.interior_violation <= c.tolerance ? "certified" : "violated";
  return c;
}

ConstantSearch search_constant(const std::string& name, std::map<std::string, double> params,
                               const std::string& param, bool larger_is_safer, double lo, double hi,
                               const Field& u, const CertRegion& region)
{
  auto passes = [&](double v) {
    params[param] = v;
    const Certificate c = certify_lower_bound(barrier_catalog(name, params), u, region);
    return c.boundary_margin > 0 && c.region_nodes > 0 &&
           c.message.find("boundary domination") == std::string::npos &&
           c.message.find("unavailable") == std::string::npos;
  };
  double safe = larger_is_safer ? hi : lo, unsafe = larger_is_safer ? lo : hi;
  if (!passes(safe)) {
    for (int it = 0; it < 60 && !passes(safe); ++it) {
      if (larger_is_safer) safe *= 2.0;
      else safe *= 0.5;
    }
    if (!passes(safe)) throw BarrierError(name + ": no value of '" + param + "' passes boundary domination");
  }
  double threshold = safe;
  if (!passes(unsafe)) {
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (safe + unsafe);
      if (passes(mid)) safe = mid;
      else unsafe = mid;
    }
    threshold = safe;
  } else {
    threshold = unsafe;
  }
  ConstantSearch s;
  s.param = param;
  s.threshold = threshold;
  s.value = larger_is_safer ? 1.1 * threshold : threshold / 1.1;
  params[param] = s.value;
  s.barrier = barrier_catalog(name, params);
  s.barrier.params[param + "_threshold"] = threshold;
  s.certificate = certify_lower_bound(s.barrier, u, region);
  return s;
}

SlopeInterval slope_bound_from_barrier(const Field& u, const Vec2& x0, double k)
{
  const Grid& g = *u.grid;
  const ConvexDomain& dom = g.spec->domain;
  if (!(k > 0)) throw BarrierError("inapplicable: k must be positive");
  if (std::abs(x0.y()) > 1e-12 || dom.distance_to_boundary(x0) > 1e-9)
    throw BarrierError("inapplicable: x0 is not on the flat boundary {x_n = 0}");
  Vec2 t, n;
  boundary_frame(dom, x0, t, n);
  if ((n - Vec2(0, 1)).norm() > 1e-9) throw BarrierError("inapplicable: inner normal at x0 is not e_n");

  const TangentPlane tp = tangent_plane(u, x0);
  SlopeInterval out;
  out.k = k;
  out.gamma = tp.gamma;

  std::map<std::string, double> p{{"x0", x0.x()}, {"k", k}, {"u0", tp.u0}, {"s0", tp.tangential_slope}};
  const ConstantSearch s = search_constant("pogorelov-w", p, "delta", false, 1e-4, 0.999, u, CertRegion{});
  out.delta = s.value;
  out.certificate = s.certificate;
  out.lo = -1.0 / (out.delta * k);

  double U = -kInf;
  for (std::size_t i = 0; i < g.spec->phi.values.size(); ++i)
    if (!g.spec->phi.infinite[i]) U = std::max(U, g.spec->phi.values[i]);
  const double texit = dom.ray_exit(x0 + Vec2(0, 1e-12), Vec2(0, 1)).t;
  out.hi = (U - tp.u0) / texit;
  return out;
}

std::string Certificate::to_json() const
{
  nlohmann::ordered_json j;
  j["name"] = name;
  j["side"] = side;
  j["region"] = region;
  nlohmann::ordered_json pj = nlohmann::ordered_json::object();
  for (const auto& [key, v] : params) pj[key] = v;
  j["params"] = pj;
  j["verdict"] = verdict;
  j["message"] = message;
  j["boundary_margin"] = boundary_margin;
  j["anchor_gap"] = std::isfinite(anchor_gap) ? nlohmann::ordered_json(anchor_gap) : nlohmann::ordered_json();
  j["det_margin"] = det_margin;
  j["discrete_margin"] = discrete_margin;
  j["interior_violation"] = interior_violation;
  j["tolerance"] = tolerance;
  j["region_nodes"] = region_nodes;
  j["boundary_nodes"] = boundary_nodes;
  j["worst_boundary"] = {worst_boundary.x(), worst_boundary.y()};
  return j.dump();
}

}  // namespace mongelab
