#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace mongelab {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

namespace geom {

inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// Andrew monotone chain; counter-clockwise, collinear points dropped.
std::vector<Vec2> convex_hull(std::vector<Vec2> pts);

double polygon_area(const std::vector<Vec2>& poly);
Vec2 polygon_centroid(const std::vector<Vec2>& poly);

bool in_convex_polygon(const std::vector<Vec2>& ccw, const Vec2& p, double tol = 0.0);

double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b);

struct SegmentHit {
  double t = 0.0;     // ray parameter
  double s = 0.0;     // position on the segment in [0,1]
};

// First crossing of p + t d (t > tmin) with segment [a,b].
std::optional<SegmentHit> ray_segment(const Vec2& p, const Vec2& d, const Vec2& a, const Vec2& b,
                                      double tmin = 0.0);

// Clip a convex polygon against the half-plane n.x <= c.
std::vector<Vec2> clip_halfplane(const std::vector<Vec2>& poly, const Vec2& n, double c);

}  // namespace geom
}  // namespace mongelab
