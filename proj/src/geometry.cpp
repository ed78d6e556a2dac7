#include "mongelab/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace mongelab::geom {

std::vector<Vec2> convex_hull(std::vector<Vec2> pts)
{
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;

  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lo = k + 1; i-- > 0;) {
    const auto& p = pts[i];
    while (k >= lo && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0) --k;
    hull[k++] = p;
  }
  hull.resize(k - 1);
  return hull;
}

double polygon_area(const std::vector<Vec2>& poly)
{
  double a = 0.0;
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) a += cross(poly[i], poly[(i + 1) % n]);
  return 0.5 * a;
}

Vec2 polygon_centroid(const std::vector<Vec2>& poly)
{
  if (poly.empty()) return Vec2::Zero();
  // shift to the first vertex to keep the sums well conditioned
  const Vec2 o = poly[0];
  double a = 0.0;
  Vec2 c = Vec2::Zero();
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
    Vec2 p = poly[i] - o, q = poly[(i + 1) % n] - o;
    double w = cross(p, q);
    a += w;
    c += w * (p + q);
  }
  if (std::abs(a) < 1e-300) {
    Vec2 m = Vec2::Zero();
    for (const auto& p : poly) m += p;
    return m / double(poly.size());
  }
  return o + c / (3.0 * a);
}

bool in_convex_polygon(const std::vector<Vec2>& ccw, const Vec2& p, double tol)
{
  const std::size_t n = ccw.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    Vec2 e = ccw[(i + 1) % n] - ccw[i];
    double len = e.norm();
    if (len == 0.0) continue;
    if (cross(e, p - ccw[i]) / len < -tol) return false;
  }
  return true;
}

double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b)
{
  Vec2 e = b - a;
  double l2 = e.squaredNorm();
  double s = l2 > 0 ? std::clamp((p - a).dot(e) / l2, 0.0, 1.0) : 0.0;
  return (a + s * e - p).norm();
}

std::optional<SegmentHit> ray_segment(const Vec2& p, const Vec2& d, const Vec2& a, const Vec2& b,
                                      double tmin)
{
  Vec2 e = b - a;
  double den = cross(d, e);
  if (den == 0.0) return std::nullopt;
  Vec2 w = a - p;
  double t = cross(w, e) / den;
  double s = cross(w, d) / den;
  const double eps = 1e-12;
  if (t <= tmin || s < -eps || s > 1.0 + eps) return std::nullopt;
  return SegmentHit{t, std::clamp(s, 0.0, 1.0)};
}

std::vector<Vec2> clip_halfplane(const std::vector<Vec2>& poly, const Vec2& n, double c)
{
  std::vector<Vec2> out;
  const std::size_t m = poly.size();
  for (std::size_t i = 0; i < m; ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % m];
    double fp = n.dot(p) - c, fq = n.dot(q) - c;
    if (fp <= 0) out.push_back(p);
    if ((fp < 0 && fq > 0) || (fp > 0 && fq < 0)) out.push_back(p + (fp / (fp - fq)) * (q - p));
  }
  return out;
}

}  // namespace mongelab::geom
