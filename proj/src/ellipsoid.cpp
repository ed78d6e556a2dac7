#include "mongelab/ellipsoid.hpp"

#include <array>
#include <limits>

namespace mongelab {

namespace {

// E = {B y + c : |y| <= 1}, B symmetric positive definite, parametrized by
// theta = (c, upper triangle of B).
template <int N>
struct MvieProblem {
  static constexpr int M = N * (N + 1) / 2;
  static constexpr int P = N + M;
  using Vec = Eigen::Matrix<double, N, 1>;
  using Mat = Eigen::Matrix<double, N, N>;
  using PVec = Eigen::Matrix<double, P, 1>;
  using PMat = Eigen::Matrix<double, P, P>;

  std::vector<Vec> a;
  std::vector<double> b;
  std::array<Mat, M> basis;

  MvieProblem()
  {
    int k = 0;
    for (int p = 0; p < N; ++p)
      for (int q = p; q < N; ++q) {
        Mat E = Mat::Zero();
        E(p, q) = 1.0;
        E(q, p) = 1.0;
        basis[k++] = E;
      }
  }

  static Vec center(const PVec& th) { return th.template head<N>(); }
  Mat shape(const PVec& th) const
  {
    Mat B = Mat::Zero();
    for (int k = 0; k < M; ++k) B += th(N + k) * basis[k];
    return B;
  }

  bool feasible(const PVec& th) const
  {
    Mat B = shape(th);
    Eigen::LLT<Mat> llt(B);
    if (llt.info() != Eigen::Success) return false;
    for (int i = 0; i < N; ++i)
      if (llt.matrixL()(i, i) <= 0) return false;
    Vec c = center(th);
    for (std::size_t i = 0; i < a.size(); ++i)
      if (b[i] - a[i].dot(c) - (B * a[i]).norm() <= 0) return false;
    return true;
  }

  double value(const PVec& th, double t) const
  {
    Mat B = shape(th);
    Vec c = center(th);
    double v = -t * std::log(B.determinant());
    for (std::size_t i = 0; i < a.size(); ++i) v -= std::log(b[i] - a[i].dot(c) - (B * a[i]).norm());
    return v;
  }

  void derivatives(const PVec& th, double t, PVec& g, PMat& H) const
  {
    Mat B = shape(th);
    Mat Bi = B.inverse();
    Vec c = center(th);
    g.setZero();
    H.setZero();
    std::array<Mat, M> BiE;
    for (int k = 0; k < M; ++k) BiE[k] = Bi * basis[k];
    for (int k = 0; k < M; ++k) {
      g(N + k) -= t * BiE[k].trace();
      for (int l = 0; l < M; ++l) H(N + k, N + l) += t * (BiE[k] * BiE[l]).trace();
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
      const Vec& ai = a[i];
      Vec y = B * ai;
      double n = y.norm();
      double s = b[i] - ai.dot(c) - n;
      PVec ds;
      ds.template head<N>() = -ai;
      std::array<Vec, M> Ea;
      for (int k = 0; k < M; ++k) {
        Ea[k] = basis[k] * ai;
        ds(N + k) = -y.dot(Ea[k]) / n;
      }
      PMat d2s = PMat::Zero();
      for (int k = 0; k < M; ++k)
        for (int l = 0; l < M; ++l)
          d2s(N + k, N + l) = -(Ea[k].dot(Ea[l]) / n - y.dot(Ea[k]) * y.dot(Ea[l]) / (n * n * n));
      g -= ds / s;
      H += ds * ds.transpose() / (s * s) - d2s / s;
    }
  }
};

}  // namespace

template <int N>
Ellipsoid<N> max_volume_inscribed_ellipsoid(const std::vector<Halfspace<N>>& hs,
                                            const Eigen::Matrix<double, N, 1>& interior, double tol,
                                            MvieInfo* info)
{
  using Prob = MvieProblem<N>;
  using PVec = typename Prob::PVec;
  using PMat = typename Prob::PMat;
  using Mat = typename Prob::Mat;
  if (hs.size() < std::size_t(N + 1)) throw EllipsoidError("polytope needs at least n+1 facets");
  Prob pr;
  double rmin = std::numeric_limits<double>::infinity();
  for (const auto& h : hs) {
    double na = h.a.norm();
    if (!(na > 0)) continue;
    pr.a.push_back(h.a / na);
    pr.b.push_back(h.b / na);
    rmin = std::min(rmin, pr.b.back() - pr.a.back().dot(interior));
  }
  if (!(rmin > 0)) throw EllipsoidError("interior point violates a facet");

  PVec th = PVec::Zero();
  th.template head<N>() = interior;
  {
    // B = 0.5 rmin I
    int k = 0;
    for (int p = 0; p < N; ++p)
      for (int q = p; q < N; ++q, ++k) th(N + k) = p == q ? 0.5 * rmin : 0.0;
  }
  const double m = double(pr.a.size());
  double t = 1.0;
  int steps = 0;
  for (int outer = 0; outer < 60; ++outer) {
    for (int it = 0; it < 200; ++it) {
      PVec g;
      PMat H;
      pr.derivatives(th, t, g, H);
      PVec dx = -H.ldlt().solve(g);
      double dec = -g.dot(dx);
      if (!(dec > 1e-14 * std::max(1.0, t)) || !dx.allFinite()) break;
      double f0 = pr.value(th, t);
      double step = 1.0;
      bool ok = false;
      for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
        PVec tn = th + step * dx;
        if (pr.feasible(tn) && pr.value(tn, t) <= f0 - 0.25 * step * dec) {
          th = tn;
          ok = true;
          break;
        }
      }
      ++steps;
      if (!ok || dec < 1e-12) break;
    }
    if (m / t < 0.1 * tol) break;
    t *= 8.0;
  }
  if (info) {
    info->newton_steps = steps;
    info->gap = m / t;
  }
  Mat B = pr.shape(th);
  Ellipsoid<N> E;
  E.center = Prob::center(th);
  Mat Bi = B.inverse();
  E.Q = Bi * Bi;
  E.Q = 0.5 * (E.Q + E.Q.transpose());
  return E;
}

template Ellipsoid<2> max_volume_inscribed_ellipsoid<2>(const std::vector<Halfspace<2>>&, const Eigen::Vector2d&,
                                                        double, MvieInfo*);
template Ellipsoid<3> max_volume_inscribed_ellipsoid<3>(const std::vector<Halfspace<3>>&, const Eigen::Vector3d&,
                                                        double, MvieInfo*);

}  // namespace mongelab
