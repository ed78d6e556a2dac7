#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace mongelab {

class EllipsoidError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shear A x = x - nu x_n with nu_n = 0.
template <int N>
struct SlidingMap {
  using Vec = Eigen::Matrix<double, N, 1>;
  using Mat = Eigen::Matrix<double, N, N>;

  Vec nu = Vec::Zero();

  SlidingMap() = default;
  explicit SlidingMap(const Vec& v) : nu(v) { nu(N - 1) = 0.0; }

  Vec apply(const Vec& x) const { return x - nu * x(N - 1); }
  Vec inverse(const Vec& x) const { return x + nu * x(N - 1); }
  Mat matrix() const
  {
    Mat A = Mat::Identity();
    A.col(N - 1) -= nu;
    return A;
  }
  double det() const { return matrix().determinant(); }
};

template <int N>
constexpr double unit_ball_volume()
{
  if constexpr (N == 1) return 2.0;
  else if constexpr (N == 2) return std::numbers::pi;
  else return 4.0 * std::numbers::pi / 3.0;
}

// E = {x : (x - c)^T Q (x - c) <= 1}
template <int N>
struct Ellipsoid {
  using Vec = Eigen::Matrix<double, N, 1>;
  using Mat = Eigen::Matrix<double, N, N>;

  Vec center = Vec::Zero();
  Mat Q = Mat::Identity();

  double form(const Vec& x) const { return (x - center).dot(Q * (x - center)); }
  bool contains(const Vec& x, double tol = 0.0) const { return form(x) <= 1.0 + tol; }
  double volume() const { return unit_ball_volume<N>() / std::sqrt(Q.determinant()); }
  // ascending semi-axis lengths
  Vec semi_axes() const
  {
    Eigen::SelfAdjointEigenSolver<Mat> es(Q);
    Vec ev = es.eigenvalues();
    Vec ax;
    for (int i = 0; i < N; ++i) ax(i) = 1.0 / std::sqrt(ev(N - 1 - i));
    return ax;
  }
  Mat axes() const
  {
    Eigen::SelfAdjointEigenSolver<Mat> es(Q);
    return es.eigenvectors().rowwise().reverse();
  }
  // k E about the center
  Ellipsoid scaled(double k) const { return {center, Q / (k * k)}; }
  // boundary point in direction y (|y| = 1) of the unit ball
  Vec boundary_point(const Vec& y) const
  {
    Eigen::LLT<Mat> llt(Q);
    Mat L = llt.matrixL();
    return center + L.transpose().template triangularView<Eigen::Upper>().solve(y);
  }
};

template <int N>
struct Halfspace {
  Eigen::Matrix<double, N, 1> a;  // a.x <= b
  double b = 0.0;
};

struct MvieInfo {
  int newton_steps = 0;
  double gap = 0.0;
};

// Maximum-volume ellipsoid inside the polytope {a_i.x <= b_i}; `interior`
// must satisfy every constraint strictly.
template <int N>
Ellipsoid<N> max_volume_inscribed_ellipsoid(const std::vector<Halfspace<N>>& hs,
                                            const Eigen::Matrix<double, N, 1>& interior,
                                            double tol = 1e-7, MvieInfo* info = nullptr);

}  // namespace mongelab
