#include "mongelab/domain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace mongelab {

namespace {

constexpr double kGeomTol = 1e-10;
constexpr double kHypTol = 1e-6;

std::string fmt_point(const Vec2& p)
{
  std::ostringstream os;
  os.precision(12);
  os << "(" << p.x() << ", " << p.y() << ")";
  return os.str();
}

double chain_scale(const std::vector<Vec2>& c)
{
  double s = 0.0;
  for (const auto& p : c) s = std::max(s, p.cwiseAbs().maxCoeff());
  return std::max(s, 1e-300);
}

void check_convex_chain(const std::vector<Vec2>& c)
{
  const std::size_t n = c.size();
  if (n < 3) throw DomainError("domain needs at least 3 boundary points");
  const double scale = chain_scale(c);
  double turning = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = c[(i + n - 1) % n];
    const Vec2& b = c[i];
    const Vec2& d = c[(i + 1) % n];
    Vec2 e1 = b - a, e2 = d - b;
    if (e1.norm() == 0.0 || e2.norm() == 0.0)
      throw DomainError("repeated boundary point at index " + std::to_string(i) + " " + fmt_point(b));
    double cr = geom::cross(e1, e2);
    if (cr < -kGeomTol * scale * scale) {
      std::ostringstream os;
      os << "non-convex vertex triple at indices (" << (i + n - 1) % n << ", " << i << ", "
         << (i + 1) % n << "): " << fmt_point(a) << " " << fmt_point(b) << " " << fmt_point(d);
      throw DomainError(os.str());
    }
    turning += std::atan2(cr, e1.dot(e2));
  }
  if (std::abs(turning - 2.0 * std::numbers::pi) > 1e-6)
    throw DomainError("boundary chain is not a simple counter-clockwise convex curve (total turning " +
                      std::to_string(turning) + ")");
}

double inscribed_normal_ball(const ConvexDomain& d)
{
  auto ok = [&](double c) {
    Vec2 ctr(0.0, c);
    if (!d.contains(ctr)) return false;
    // samples lie on the true boundary; chords near the anchor always cut a tangent ball
    for (const auto& b : d.boundary)
      if ((b - ctr).norm() < c * (1.0 - 1e-12)) return false;
    return true;
  };
  double lo = 0.0, hi = d.r_out;
  if (ok(hi)) return hi;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * d.r_out; ++it) {
    double mid = 0.5 * (lo + hi);
    (ok(mid) ? lo : hi) = mid;
  }
  return lo;
}

void compute_radii(ConvexDomain& d)
{
  d.r_out = 0.0;
  for (const auto& p : d.boundary) d.r_out = std::max(d.r_out, p.norm());
  d.rho_in = inscribed_normal_ball(d);
  d.rho = std::min(d.rho_in, 1.0 / d.r_out);
}

// Resample a closed polygon so that every edge is split evenly and the total
// number of points is about `samples`.
std::vector<Vec2> resample_polygon(const std::vector<Vec2>& v, std::size_t samples)
{
  double per = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) per += (v[(i + 1) % v.size()] - v[i]).norm();
  std::vector<Vec2> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec2& a = v[i];
    const Vec2& b = v[(i + 1) % v.size()];
    auto m = std::max<std::size_t>(1, std::size_t(std::ceil(double(samples) * (b - a).norm() / per)));
    for (std::size_t k = 0; k < m; ++k) out.push_back(a + (double(k) / double(m)) * (b - a));
  }
  return out;
}

}  // namespace

bool ConvexDomain::contains(const Vec2& p, double tol) const
{
  return geom::in_convex_polygon(boundary, p, tol);
}

double ConvexDomain::distance_to_boundary(const Vec2& p) const
{
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0, n = boundary.size(); i < n; ++i)
    d = std::min(d, geom::segment_distance(p, boundary[i], boundary[(i + 1) % n]));
  return d;
}

double ConvexDomain::perimeter() const
{
  double s = 0.0;
  for (std::size_t i = 0, n = boundary.size(); i < n; ++i) s += (boundary[(i + 1) % n] - boundary[i]).norm();
  return s;
}

double ConvexDomain::area() const { return geom::polygon_area(boundary); }

double ConvexDomain::diameter() const
{
  auto hull = geom::convex_hull(boundary);
  double d = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i)
    for (std::size_t j = i + 1; j < hull.size(); ++j) d = std::max(d, (hull[i] - hull[j]).norm());
  return d;
}

void ConvexDomain::bounding_box(Vec2& lo, Vec2& hi) const
{
  lo = hi = boundary.front();
  for (const auto& p : boundary) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
}

ConvexDomain::Hit ConvexDomain::ray_exit(const Vec2& p, const Vec2& d) const
{
  Hit best;
  best.t = std::numeric_limits<double>::infinity();
  const double tmin = 1e-13 / std::max(d.norm(), 1e-300);
  for (std::size_t i = 0, n = boundary.size(); i < n; ++i) {
    auto h = geom::ray_segment(p, d, boundary[i], boundary[(i + 1) % n], tmin);
    if (h && h->t < best.t) {
      best.t = h->t;
      best.s = h->s;
      best.segment = i;
    }
  }
  if (!std::isfinite(best.t)) throw DomainError("ray from " + fmt_point(p) + " does not leave the domain");
  best.point = p + best.t * d;
  return best;
}

ConvexDomain::Hit ConvexDomain::nearest(const Vec2& p) const
{
  Hit best;
  double dmin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0, n = boundary.size(); i < n; ++i) {
    const Vec2& a = boundary[i];
    Vec2 e = boundary[(i + 1) % n] - a;
    double l2 = e.squaredNorm();
    double s = l2 > 0 ? std::clamp((p - a).dot(e) / l2, 0.0, 1.0) : 0.0;
    double dd = (a + s * e - p).norm();
    if (dd < dmin) {
      dmin = dd;
      best.segment = i;
      best.s = s;
      best.point = a + s * e;
    }
  }
  best.t = dmin;
  return best;
}

ConvexDomain domain_from_chain(std::vector<Vec2> chain, std::size_t anchor)
{
  if (geom::polygon_area(chain) < 0) {
    std::reverse(chain.begin(), chain.end());
    anchor = chain.size() - 1 - anchor;
  }
  check_convex_chain(chain);
  ConvexDomain d;
  d.boundary = std::move(chain);
  d.anchor = anchor;
  compute_radii(d);
  return d;
}

ConvexDomain normalize_domain(ConvexDomain d)
{
  const std::size_t n = d.boundary.size();
  const Vec2 a = d.boundary[d.anchor];
  for (auto& p : d.boundary) p -= a;
  Vec2 t = d.boundary[(d.anchor + 1) % n] - d.boundary[(d.anchor + n - 1) % n];
  t.normalize();
  Vec2 nrm(-t.y(), t.x());
  if (std::abs(nrm.x()) > 1e-14 || nrm.y() < 0) {
    Mat2 R;
    R << nrm.y(), -nrm.x(), nrm.x(), nrm.y();
    for (auto& p : d.boundary) p = R * p;
    d.boundary[d.anchor] = Vec2::Zero();
  }
  check_convex_chain(d.boundary);
  compute_radii(d);
  return d;
}

ConvexDomain make_domain(const DomainDescription& desc)
{
  using std::numbers::pi;
  const std::size_t N = std::max<std::size_t>(desc.samples, 16);
  std::vector<Vec2> chain;
  std::size_t anchor = 0;

  switch (desc.kind) {
    case DomainDescription::Kind::HalfDisk: {
      const double R = desc.radius;
      if (!(R > 0)) throw DomainError("half-disk radius must be positive");
      const double per = (2.0 + pi) * R;
      std::size_t m = 2 * std::max<std::size_t>(2, std::size_t(std::llround(0.5 * N * 2.0 * R / per)));
      std::size_t k = std::max<std::size_t>(8, N - m);
      // flat edge from the origin to (R,0), arc, flat edge back to the origin
      for (std::size_t i = m / 2; i < m; ++i) chain.emplace_back(R * (2.0 * double(i) - double(m)) / double(m), 0.0);
      for (std::size_t j = 0; j < k; ++j) {
        double th = pi * double(j) / double(k);
        chain.emplace_back(j == 0 ? R : R * std::cos(th), j == 0 ? 0.0 : R * std::sin(th));
      }
      for (std::size_t i = 0; i < m / 2; ++i) chain.emplace_back(R * (2.0 * double(i) - double(m)) / double(m), 0.0);
      anchor = 0;
      break;
    }
    case DomainDescription::Kind::Disk: {
      const double R = desc.radius;
      if (!(R > 0)) throw DomainError("disk radius must be positive");
      for (std::size_t j = 0; j < N; ++j) {
        double th = -0.5 * pi + 2.0 * pi * double(j) / double(N);
        chain.emplace_back(j == 0 ? 0.0 : R * std::cos(th), j == 0 ? 0.0 : R + R * std::sin(th));
      }
      anchor = 0;
      break;
    }
    case DomainDescription::Kind::Polygon: {
      std::vector<Vec2> v = desc.vertices;
      if (v.size() < 3) throw DomainError("polygon needs at least 3 vertices");
      if (geom::polygon_area(v) < 0) std::reverse(v.begin(), v.end());
      check_convex_chain(v);
      // anchor: given point or the midpoint of the edge facing -e_2
      Vec2 ap;
      if (desc.anchor) {
        ap = *desc.anchor;
      } else {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < v.size(); ++i) {
          Vec2 e = (v[(i + 1) % v.size()] - v[i]).normalized();
          double score = -e.x();  // y-component of the outward normal
          if (score < best - 1e-12) {
            best = score;
            ap = 0.5 * (v[i] + v[(i + 1) % v.size()]);
          }
        }
      }
      // insert anchor into its edge, then resample
      std::size_t edge = v.size();
      for (std::size_t i = 0; i < v.size() && edge == v.size(); ++i)
        if (geom::segment_distance(ap, v[i], v[(i + 1) % v.size()]) <= kGeomTol * chain_scale(v)) edge = i;
      if (edge == v.size()) throw DomainError("anchor " + fmt_point(ap) + " is not on the polygon boundary");
      std::vector<Vec2> w;
      for (std::size_t i = 0; i < v.size(); ++i) {
        w.push_back(v[i]);
        if (i == edge && (ap - v[i]).norm() > 0 && (ap - v[(i + 1) % v.size()]).norm() > 0) w.push_back(ap);
      }
      // rotate so the anchor is first, then resample edge by edge
      auto it = std::find_if(w.begin(), w.end(), [&](const Vec2& p) { return (p - ap).norm() == 0.0; });
      std::rotate(w.begin(), it, w.end());
      chain = resample_polygon(w, N);
      anchor = 0;
      break;
    }
    case DomainDescription::Kind::Sublevel: {
      if (!desc.g) throw DomainError("sublevel domain needs a function g");
      const Vec2 c = desc.interior_point;
      if (!(desc.g(c) < 1.0)) throw DomainError("interior point " + fmt_point(c) + " has g >= 1");
      for (std::size_t j = 0; j < N; ++j) {
        double th = -0.5 * pi + 2.0 * pi * double(j) / double(N);
        Vec2 dir = j == 0 ? Vec2(0.0, -1.0) : Vec2(std::cos(th), std::sin(th));
        double hi = 1.0;
        int guard = 0;
        while (desc.g(c + hi * dir) < 1.0) {
          hi *= 2.0;
          if (++guard > 60) throw DomainError("sublevel set is unbounded");
        }
        double lo = 0.0;
        for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
          double mid = 0.5 * (lo + hi);
          (desc.g(c + mid * dir) < 1.0 ? lo : hi) = mid;
        }
        chain.push_back(c + 0.5 * (lo + hi) * dir);
      }
      anchor = 0;
      break;
    }
  }
  ConvexDomain d = domain_from_chain(std::move(chain), anchor);
  return normalize_domain(std::move(d));
}

BoundaryFunction sample_boundary_function(const ConvexDomain& dom,
                                          const std::function<double(const Vec2&)>& phi)
{
  BoundaryFunction bf;
  const std::size_t n = dom.size();
  bf.values.resize(n);
  bf.infinite.assign(n, 0);
  double sup = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    double v = phi(dom.boundary[i]);
    if (std::isnan(v) || v == -std::numeric_limits<double>::infinity())
      throw DomainError("boundary data is not bounded below at " + fmt_point(dom.boundary[i]));
    bf.values[i] = v;
    if (std::isinf(v))
      bf.infinite[i] = 1;
    else
      sup = std::max(sup, v);
  }
  if (!std::isfinite(sup)) throw DomainError("boundary data is +infinity everywhere");
  bf.sentinel = sup >= 0 ? 10.0 * (sup + 1.0) : 10.0 * (std::abs(sup) + 1.0);
  for (std::size_t i = 0; i < n; ++i)
    if (bf.infinite[i]) bf.values[i] = bf.sentinel;
  bf.lower_semicontinuous = check_lower_semicontinuous(bf.values);
  return bf;
}

bool check_lower_semicontinuous(const std::vector<double>& v)
{
  const std::size_t n = v.size();
  if (n < 3) return true;
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = std::abs(v[(i + 1) % n] - v[i]);
  std::vector<double> s = d;
  std::nth_element(s.begin(), s.begin() + n / 2, s.end());
  const double jump = 100.0 * s[n / 2] + 1e-12;
  for (std::size_t i = 0; i < n; ++i) {
    double nb = std::max(v[(i + n - 1) % n], v[(i + 1) % n]);
    if (v[i] - nb > jump) return false;
  }
  return true;
}

BoundaryFunction convex_envelope(const BoundaryFunction& phi, const ConvexDomain& dom)
{
  const std::size_t n = dom.size();
  if (phi.values.size() != n) throw DomainError("boundary function does not match the domain samples");
  for (double v : phi.values)
    if (std::isnan(v) || v == -std::numeric_limits<double>::infinity())
      throw DomainError("boundary data is not bounded below");

  BoundaryFunction out = phi;
  std::vector<Vec2> dir(n);
  for (std::size_t i = 0; i < n; ++i) dir[i] = (dom.vertex(i + 1) - dom.vertex(i)).normalized();
  auto collinear = [&](std::size_t i, std::size_t j) {
    return std::abs(geom::cross(dir[i], dir[j])) <= kGeomTol && dir[i].dot(dir[j]) > 0;
  };

  // start at a segment that does not continue the previous one
  std::size_t start = n;
  for (std::size_t i = 0; i < n; ++i)
    if (!collinear((i + n - 1) % n, i)) {
      start = i;
      break;
    }
  if (start == n) return out;

  std::size_t seg = 0;
  while (seg < n) {
    std::size_t first = (start + seg) % n;
    std::size_t len = 1;
    while (seg + len < n && collinear((first + len - 1) % n, (first + len) % n)) ++len;
    if (len >= 2) {
      // lower hull of (s, phi) over the run's len+1 samples
      const Vec2 x0 = dom.vertex(first);
      const Vec2 e = dir[first];
      std::vector<std::pair<double, double>> pts(len + 1);
      for (std::size_t k = 0; k <= len; ++k) {
        std::size_t idx = (first + k) % n;
        pts[k] = {(dom.boundary[idx] - x0).dot(e), phi.values[idx]};
      }
      std::vector<std::size_t> hull;
      for (std::size_t k = 0; k <= len; ++k) {
        while (hull.size() >= 2) {
          auto [s1, v1] = pts[hull[hull.size() - 2]];
          auto [s2, v2] = pts[hull.back()];
          auto [s3, v3] = pts[k];
          if ((s2 - s1) * (v3 - v1) - (v2 - v1) * (s3 - s1) <= 0)
            hull.pop_back();
          else
            break;
        }
        hull.push_back(k);
      }
      std::size_t h = 0;
      for (std::size_t k = 0; k <= len; ++k) {
        while (h + 1 < hull.size() && hull[h + 1] < k) ++h;
        std::size_t a = hull[h], b = hull[std::min(h + 1, hull.size() - 1)];
        double val;
        if (k == a || a == b) {
          val = pts[a].second;
        } else if (k == b) {
          val = pts[b].second;
        } else {
          double w = (pts[k].first - pts[a].first) / (pts[b].first - pts[a].first);
          val = (1.0 - w) * pts[a].second + w * pts[b].second;
        }
        std::size_t idx = (first + k) % n;
        out.values[idx] = std::min(out.values[idx], val);
      }
    }
    seg += len;
  }
  for (std::size_t i = 0; i < n; ++i)
    out.infinite[i] = phi.infinite[i] && out.values[i] >= phi.sentinel ? 1 : 0;
  out.lower_semicontinuous = check_lower_semicontinuous(out.values);
  return out;
}

void ProblemSpec::validate() const
{
  if (!(lambda > 0)) throw DomainError("lambda must be positive");
  if (!(Lambda >= lambda)) throw DomainError("Lambda must be at least lambda");
  if (!(alpha > 0 && alpha < 1)) throw DomainError("alpha must lie in (0,1)");
  if (!(M >= 0)) throw DomainError("M must be nonnegative");
  if (!f) throw DomainError("right-hand side missing");
  if (phi.values.size() != domain.size()) throw DomainError("boundary data does not match domain");
}

ProblemSpec make_problem(ConvexDomain dom, const ScalarField& phi, ScalarField f, double lambda,
                         double Lambda, double alpha, double M)
{
  ProblemSpec s;
  s.phi = convex_envelope(sample_boundary_function(dom, phi), dom);
  s.domain = std::move(dom);
  s.f = std::move(f);
  s.lambda = lambda;
  s.Lambda = Lambda;
  s.alpha = alpha;
  s.M = M;
  s.validate();
  return s;
}

namespace {

// slope of log(ratio) against log|x| from annular minima, |x| in (r/2, r]
double decay_exponent(const std::vector<std::pair<double, double>>& r_ratio, double rmax)
{
  std::vector<double> lx, ly;
  double r = rmax;
  for (int lvl = 0; lvl < 60; ++lvl, r *= 0.5) {
    double m = std::numeric_limits<double>::infinity();
    int cnt = 0;
    for (auto [rr, q] : r_ratio)
      if (rr > 0.5 * r && rr <= r) {
        m = std::min(m, q);
        ++cnt;
      }
    if (cnt < 3) break;
    if (m <= 0) return std::numeric_limits<double>::infinity();
    lx.push_back(std::log(r));
    ly.push_back(std::log(m));
  }
  if (lx.size() < 3) return 0.0;
  // fit over the finest half of the levels (at least 3)
  std::size_t k0 = lx.size() >= 6 ? lx.size() / 2 : 0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  double m = double(lx.size() - k0);
  for (std::size_t i = k0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

// Least-squares polynomial fit y(x) of given degree; returns coefficients.
Eigen::VectorXd polyfit(const std::vector<double>& x, const std::vector<double>& y, int deg)
{
  Eigen::MatrixXd A(x.size(), deg + 1);
  Eigen::VectorXd b(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double p = 1.0;
    for (int k = 0; k <= deg; ++k, p *= x[i]) A(i, k) = p;
    b(i) = y[i];
  }
  return A.colPivHouseholderQr().solve(b);
}

double polyfit_residual(const std::vector<double>& x, const std::vector<double>& y, int deg)
{
  Eigen::VectorXd c = polyfit(x, y, deg);
  double r = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double v = 0.0, p = 1.0;
    for (int k = 0; k <= deg; ++k, p *= x[i]) v += c(k) * p;
    r = std::max(r, std::abs(v - y[i]));
  }
  return r;
}

// Menger curvature of the chain near the anchor (within radius r).
double min_curvature_near(const ConvexDomain& d, double r, double& maxk)
{
  const std::size_t n = d.size();
  double mink = std::numeric_limits<double>::infinity();
  maxk = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& b = d.boundary[i];
    if (b.norm() > r) continue;
    const Vec2& a = d.vertex(i + n - 1);
    const Vec2& c = d.vertex(i + 1);
    double k = 2.0 * geom::cross(b - a, c - b) / ((b - a).norm() * (c - b).norm() * (c - a).norm());
    mink = std::min(mink, k);
    maxk = std::max(maxk, k);
  }
  return mink;
}

struct NearSamples {
  std::vector<double> x1, xn, phi;
  std::vector<Vec2> pts;
};

NearSamples near_samples(const ProblemSpec& s, double r)
{
  NearSamples ns;
  for (std::size_t i = 0; i < s.domain.size(); ++i) {
    const Vec2& p = s.domain.boundary[i];
    if (p.norm() <= r && p.y() <= r) {
      ns.x1.push_back(p.x());
      ns.xn.push_back(p.y());
      ns.phi.push_back(s.phi.values[i]);
      ns.pts.push_back(p);
    }
  }
  return ns;
}

}  // namespace

SeparationResult quadratic_separation(const ProblemSpec& spec, const AffineFunction& tangent)
{
  SeparationResult r;
  r.mu_lo = std::numeric_limits<double>::infinity();
  r.mu_hi = -std::numeric_limits<double>::infinity();
  const double rho = spec.domain.rho;
  const double tiny = 1e-12 * spec.domain.r_out;
  std::vector<std::pair<double, double>> rq;
  for (std::size_t i = 0; i < spec.domain.size(); ++i) {
    const Vec2& x = spec.domain.boundary[i];
    if (x.y() > rho) continue;
    double nx = x.norm();
    if (nx <= tiny) continue;
    double q = (spec.phi.values[i] - tangent(x)) / (nx * nx);
    rq.emplace_back(nx, q);
    if (q < r.mu_lo) {
      r.mu_lo = q;
      r.argmin = x;
    }
    r.mu_hi = std::max(r.mu_hi, q);
  }
  r.samples = rq.size();
  if (rq.empty()) {
    r.message = "no boundary samples in the strip x_n <= rho";
    return r;
  }
  r.decay_exponent = decay_exponent(rq, rho);
  std::ostringstream os;
  if (r.mu_lo <= kHypTol) {
    os << "separation failure: mu_lo = " << r.mu_lo << " at " << fmt_point(r.argmin);
  } else if (r.decay_exponent >= 0.5) {
    os << "separation failure: lower ratio decays like |x|^" << r.decay_exponent
       << " toward x0 (mu_lo -> 0 under refinement)";
  } else if (!std::isfinite(r.mu_hi)) {
    os << "separation failure: mu_hi unbounded";
  } else {
    r.success = true;
    os << "mu in [" << r.mu_lo << ", " << r.mu_hi << "]";
  }
  r.message = os.str();
  return r;
}

HypothesisVerdict check_hypothesis_case(const ProblemSpec& spec, int which)
{
  HypothesisVerdict v;
  v.hypothesis_case = which;
  std::ostringstream os;
  const double r = 0.5 * spec.domain.rho;
  NearSamples ns = near_samples(spec, r);
  if (ns.pts.size() < 8) {
    v.diagnostics = "too few boundary samples near x0";
    return v;
  }
  double maxk = 0.0;
  const double mink = min_curvature_near(spec.domain, r, maxk);
  const bool uniformly_convex = mink >= 1e-4;

  auto phi_scale = [&] {
    double s = 1.0;
    for (double p : ns.phi) s = std::max(s, std::abs(p));
    return s;
  };

  switch (which) {
    case 1: {
      Eigen::MatrixXd A(ns.pts.size(), 3);
      Eigen::VectorXd b(ns.pts.size());
      for (std::size_t i = 0; i < ns.pts.size(); ++i) {
        A.row(i) << 1.0, ns.pts[i].x(), ns.pts[i].y();
        b(i) = ns.phi[i];
      }
      Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
      double res = (A * c - b).cwiseAbs().maxCoeff();
      bool linear = res <= kHypTol * phi_scale();
      v.modulus = mink;
      v.satisfied = linear && uniformly_convex;
      os << "affine fit residual " << res << (linear ? " (linear)" : " (not linear)")
         << "; boundary curvature min " << mink << (uniformly_convex ? " (uniformly convex)" : " (not uniformly convex)");
      break;
    }
    case 2: {
      double maxk_small = 0.0;
      min_curvature_near(spec.domain, 0.25 * r, maxk_small);
      bool tangent2 = maxk_small <= kHypTol;
      // growth of phi above its tangent line at x0 along the boundary
      Eigen::VectorXd c = polyfit(ns.x1, ns.phi, 3);
      const double phi0 = spec.phi.values[spec.domain.anchor];
      std::vector<std::pair<double, double>> rq;
      double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
      for (std::size_t i = 0; i < ns.pts.size(); ++i) {
        double a = std::abs(ns.x1[i]);
        if (a <= 1e-12) continue;
        double q = (ns.phi[i] - phi0 - c(1) * ns.x1[i]) / (a * a);
        rq.emplace_back(a, q);
        lo = std::min(lo, q);
        hi = std::max(hi, q);
      }
      double dec = decay_exponent(rq, r);
      bool growth = lo > kHypTol && dec < 0.5 && std::isfinite(hi);
      v.modulus = lo;
      v.satisfied = tangent2 && growth;
      os << "boundary curvature near x0 max " << maxk_small << (tangent2 ? " (tangent of order 2)" : " (curved)")
         << "; quadratic growth ratio in [" << lo << ", " << hi << "], decay exponent " << dec
         << (growth ? "" : " (no quadratic lower bound)");
      break;
    }
    case 3: {
      // C^3 at x0: cubic fit residual must vanish faster than r^3
      auto c3 = [&](const std::vector<double>& y) {
        std::vector<double> xs, ys, xs2, ys2;
        for (std::size_t i = 0; i < ns.x1.size(); ++i) {
          xs.push_back(ns.x1[i]);
          ys.push_back(y[i]);
          if (std::abs(ns.x1[i]) <= 0.5 * r) {
            xs2.push_back(ns.x1[i]);
            ys2.push_back(y[i]);
          }
        }
        if (xs2.size() < 6) return false;
        double r1 = polyfit_residual(xs, ys, 3) / (r * r * r);
        double r2 = polyfit_residual(xs2, ys2, 3) / (0.125 * r * r * r);
        return r2 <= 1e-9 || r2 <= 0.75 * r1;
      };
      bool phi_c3 = c3(ns.phi);
      bool bdry_c3 = c3(ns.xn);
      v.modulus = mink;
      v.satisfied = phi_c3 && bdry_c3 && uniformly_convex;
      os << "phi C3 " << (phi_c3 ? "yes" : "no") << "; boundary C3 " << (bdry_c3 ? "yes" : "no")
         << "; boundary curvature min " << mink << (uniformly_convex ? " (uniformly convex)" : " (not uniformly convex)");
      break;
    }
    default:
      os << "unknown hypothesis case " << which;
  }
  v.diagnostics = os.str();
  return v;
}

}  // namespace mongelab
