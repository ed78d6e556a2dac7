#include "mongelab/solver.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

namespace mongelab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void stencil(int width, std::vector<Eigen::Vector2i>& dirs, std::vector<std::array<int, 2>>& pairs)
{
  dirs = {{1, 0}, {0, 1}, {1, 1}, {-1, 1}};
  pairs = {{0, 1}, {2, 3}};
  if (width >= 2) {
    dirs.insert(dirs.end(), {{2, 1}, {-1, 2}, {1, 2}, {-2, 1}});
    pairs.push_back({4, 5});
    pairs.push_back({6, 7});
  }
}

}  // namespace

int Grid::cell_of(const Vec2& x) const
{
  int ci = int(std::floor(x.x() / delta)) - i0;
  int cj = int(std::floor(x.y() / delta)) - j0;
  ci = std::clamp(ci, 0, nx - 1);
  cj = std::clamp(cj, 0, ny - 1);
  return cj * nx + ci;
}

double Grid::boundary_distance(const Vec2& x) const
{
  const auto& b = spec->domain.boundary;
  const std::size_t n = b.size();
  const int c = cell_of(x);
  const int ci = c % nx, cj = c / nx;
  double best = std::numeric_limits<double>::infinity();
  for (int ring = 0; ring < std::max(nx, ny); ++ring) {
    for (int j = cj - ring; j <= cj + ring; ++j)
      for (int i = ci - ring; i <= ci + ring; ++i) {
        if (std::max(std::abs(i - ci), std::abs(j - cj)) != ring) continue;
        if (i < 0 || j < 0 || i >= nx || j >= ny) continue;
        for (int s : segment_bins[j * nx + i])
          best = std::min(best, geom::segment_distance(x, b[s], b[(s + 1) % n]));
      }
    // every cell outside the current ring is at least ring*delta away
    if (best <= double(ring) * delta) break;
  }
  return best;
}

ConvexDomain::Hit Grid::ray_exit(const Vec2& x, const Vec2& d) const
{
  const auto& b = spec->domain.boundary;
  const std::size_t n = b.size();
  Vec2 far = x + 3.0 * d;
  int lo_i = int(std::floor(std::min(x.x(), far.x()) / delta)) - i0 - 1;
  int hi_i = int(std::floor(std::max(x.x(), far.x()) / delta)) - i0 + 1;
  int lo_j = int(std::floor(std::min(x.y(), far.y()) / delta)) - j0 - 1;
  int hi_j = int(std::floor(std::max(x.y(), far.y()) / delta)) - j0 + 1;
  ConvexDomain::Hit best;
  best.t = std::numeric_limits<double>::infinity();
  const double tmin = 1e-13 / std::max(d.norm(), 1e-300);
  for (int j = std::max(lo_j, 0); j <= std::min(hi_j, ny - 1); ++j)
    for (int i = std::max(lo_i, 0); i <= std::min(hi_i, nx - 1); ++i)
      for (int s : segment_bins[j * nx + i]) {
        auto h = geom::ray_segment(x, d, b[s], b[(s + 1) % n], tmin);
        if (h && h->t < best.t) {
          best.t = h->t;
          best.s = h->s;
          best.segment = std::size_t(s);
        }
      }
  if (!std::isfinite(best.t) || best.t > 3.0) return spec->domain.ray_exit(x, d);
  best.point = x + best.t * d;
  return best;
}

Vec2 Grid::arm_point(int i, int k, int side) const
{
  const Arm& a = arm(i, k, side);
  if (a.node >= 0) return nodes[a.node];
  return bpoints[a.bpoint].x;
}

bool Grid::same_geometry(const Grid& o) const
{
  return delta == o.delta && width == o.width && i0 == o.i0 && j0 == o.j0 && nx == o.nx && ny == o.ny &&
         nodes.size() == o.nodes.size() && bpoints.size() == o.bpoints.size() && kind == o.kind;
}

std::shared_ptr<Grid> Grid::with_boundary_data(const BoundaryFunction& phi) const
{
  auto g = std::make_shared<Grid>(*this);
  auto sp = std::make_shared<ProblemSpec>(*spec);
  sp->phi = convex_envelope(phi, sp->domain);
  for (auto& bp : g->bpoints) bp.value = sp->phi.at(bp.segment, bp.s, sp->domain.size());
  g->spec = sp;
  return g;
}

double max_feasible_delta(const ProblemSpec& spec) { return 2.0 * spec.domain.rho / 8.0; }

std::shared_ptr<const Grid> discretize(std::shared_ptr<const ProblemSpec> spec, double delta, int stencil_width)
{
  if (!spec) throw SolverError("discretize: missing problem");
  spec->validate();
  if (!(delta > 0)) throw SolverError("grid spacing must be positive");
  const double dmax = max_feasible_delta(*spec);
  if (delta > dmax) {
    std::ostringstream os;
    os << "grid spacing " << delta << " too coarse: need delta <= " << dmax
       << " for 8 nodes across the inner ball of radius " << spec->domain.rho;
    throw SolverError(os.str());
  }
  if (stencil_width < 1 || stencil_width > 2) throw SolverError("stencil width must be 1 or 2");

  auto g = std::make_shared<Grid>();
  g->delta = delta;
  g->width = stencil_width;
  g->spec = spec;
  stencil(stencil_width, g->dirs, g->pairs);

  const ConvexDomain& dom = spec->domain;
  const auto& B = dom.boundary;
  const std::size_t nb = B.size();
  Vec2 lo, hi;
  dom.bounding_box(lo, hi);
  g->i0 = int(std::floor(lo.x() / delta + 1e-9)) - 1;
  g->j0 = int(std::floor(lo.y() / delta + 1e-9)) - 1;
  const int i1 = int(std::ceil(hi.x() / delta - 1e-9)) + 1;
  const int j1 = int(std::ceil(hi.y() / delta - 1e-9)) + 1;
  g->nx = i1 - g->i0 + 1;
  g->ny = j1 - g->j0 + 1;
  const int nx = g->nx, ny = g->ny;
  const std::size_t nlat = std::size_t(nx) * ny;

  // segment bins
  g->segment_bins.assign(nlat, {});
  for (std::size_t s = 0; s < nb; ++s) {
    const Vec2& a = B[s];
    const Vec2& b = B[(s + 1) % nb];
    int ia = int(std::floor(std::min(a.x(), b.x()) / delta)) - g->i0;
    int ib = int(std::floor(std::max(a.x(), b.x()) / delta)) - g->i0;
    int ja = int(std::floor(std::min(a.y(), b.y()) / delta)) - g->j0;
    int jb = int(std::floor(std::max(a.y(), b.y()) / delta)) - g->j0;
    for (int j = std::max(ja - 1, 0); j <= std::min(jb, ny - 1); ++j)
      for (int i = std::max(ia - 1, 0); i <= std::min(ib, nx - 1); ++i) g->segment_bins[j * nx + i].push_back(int(s));
  }

  // row intervals and inside test
  const double scale = std::max(1.0, dom.r_out);
  const double tol_on = 1e-12 * scale;
  std::vector<char> inside(nlat, 0);
  for (int j = 0; j < ny; ++j) {
    const double y = double(g->j0 + j) * delta;
    double xl = std::numeric_limits<double>::infinity(), xr = -xl;
    for (std::size_t s = 0; s < nb; ++s) {
      const Vec2& a = B[s];
      const Vec2& b = B[(s + 1) % nb];
      if (y < std::min(a.y(), b.y()) - tol_on || y > std::max(a.y(), b.y()) + tol_on) continue;
      if (std::abs(b.y() - a.y()) <= tol_on) {
        xl = std::min({xl, a.x(), b.x()});
        xr = std::max({xr, a.x(), b.x()});
      } else {
        double w = std::clamp((y - a.y()) / (b.y() - a.y()), 0.0, 1.0);
        double x = a.x() + w * (b.x() - a.x());
        xl = std::min(xl, x);
        xr = std::max(xr, x);
      }
    }
    if (!(xl <= xr)) continue;
    for (int i = 0; i < nx; ++i) {
      double x = double(g->i0 + i) * delta;
      if (x >= xl - tol_on && x <= xr + tol_on) inside[j * nx + i] = 1;
    }
  }

  g->kind.assign(nlat, NodeKind::Exterior);
  g->unknown_of.assign(nlat, -1);
  g->bpoint_of.assign(nlat, -1);
  const double excl = g->exclusion * delta;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int lat = j * nx + i;
      if (!inside[lat]) continue;
      bool full = true;
      for (int dj = -1; dj <= 1 && full; ++dj)
        for (int di = -1; di <= 1 && full; ++di) {
          int ii = i + di, jj = j + dj;
          if (ii < 0 || jj < 0 || ii >= nx || jj >= ny || !inside[jj * nx + ii]) full = false;
        }
      if (full) {
        g->kind[lat] = NodeKind::Interior;
        continue;
      }
      const Vec2 x = g->lattice_point(lat);
      const double d = g->boundary_distance(x);
      if (d <= 10.0 * tol_on) {
        g->kind[lat] = NodeKind::Boundary;
        auto h = dom.nearest(x);
        BoundaryPoint bp;
        bp.x = x;
        bp.segment = h.segment;
        bp.s = h.s;
        bp.value = spec->phi.at(h.segment, h.s, nb);
        bp.lattice = lat;
        g->bpoint_of[lat] = int(g->bpoints.size());
        g->bpoints.push_back(bp);
      } else if (d < excl) {
        g->kind[lat] = NodeKind::NearBoundary;
      } else {
        g->kind[lat] = NodeKind::Interior;
      }
    }
  for (std::size_t lat = 0; lat < nlat; ++lat)
    if (g->kind[lat] == NodeKind::Interior) {
      g->unknown_of[lat] = int(g->nodes.size());
      g->lattice_of.push_back(int(lat));
      g->nodes.push_back(g->lattice_point(int(lat)));
    }
  if (g->nodes.empty()) throw SolverError("grid has no interior nodes");

  // stencil arms
  const int K = g->K();
  g->arms.resize(g->nodes.size() * std::size_t(K) * 2);
  for (std::size_t u = 0; u < g->nodes.size(); ++u) {
    const int lat = g->lattice_of[u];
    const int i = lat % nx, j = lat / nx;
    for (int k = 0; k < K; ++k)
      for (int side = 0; side < 2; ++side) {
        const int sg = side == 0 ? 1 : -1;
        const int ii = i + sg * g->dirs[k].x(), jj = j + sg * g->dirs[k].y();
        Arm a;
        NodeKind nk = (ii < 0 || jj < 0 || ii >= nx || jj >= ny) ? NodeKind::Exterior : g->kind[jj * nx + ii];
        if (nk == NodeKind::Interior) {
          a.node = g->unknown_of[jj * nx + ii];
        } else if (nk == NodeKind::Boundary) {
          a.bpoint = g->bpoint_of[jj * nx + ii];
        } else {
          const Vec2 d = double(sg) * delta * g->dirs[k].cast<double>();
          auto h = g->ray_exit(g->nodes[u], d);
          BoundaryPoint bp;
          bp.x = h.point;
          bp.segment = h.segment;
          bp.s = h.s;
          bp.value = spec->phi.at(h.segment, h.s, nb);
          a.bpoint = int(g->bpoints.size());
          a.frac = h.t;
          g->bpoints.push_back(bp);
        }
        g->arms[(u * K + k) * 2 + side] = a;
      }
  }

  // chain samples as boundary points for interpolation and sections
  for (std::size_t s = 0; s < nb; ++s) {
    BoundaryPoint bp;
    bp.x = B[s];
    bp.segment = s;
    bp.s = 0.0;
    bp.value = spec->phi.values[s];
    g->bpoints.push_back(bp);
  }
  g->bpoint_bins.assign(nlat, {});
  for (std::size_t b = 0; b < g->bpoints.size(); ++b) g->bpoint_bins[g->cell_of(g->bpoints[b].x)].push_back(int(b));
  return g;
}

double Field::scale() const
{
  double s = u.size() ? u.cwiseAbs().maxCoeff() : 0.0;
  for (const auto& b : grid->bpoints) s = std::max(s, std::abs(b.value));
  return s;
}

double Field::lattice_value(int lat) const
{
  int k = grid->unknown_of[lat];
  if (k >= 0) return u[k];
  int b = grid->bpoint_of[lat];
  if (b >= 0) return grid->bpoints[b].value;
  return kNaN;
}

double Field::evaluate(const Vec2& x) const
{
  const Grid& g = *grid;
  const double fx = x.x() / g.delta - g.i0, fy = x.y() / g.delta - g.j0;
  const int ci = int(std::floor(fx)), cj = int(std::floor(fy));
  if (ci >= 0 && cj >= 0 && ci + 1 < g.nx && cj + 1 < g.ny) {
    const double v00 = lattice_value(cj * g.nx + ci), v10 = lattice_value(cj * g.nx + ci + 1);
    const double v01 = lattice_value((cj + 1) * g.nx + ci), v11 = lattice_value((cj + 1) * g.nx + ci + 1);
    if (std::isfinite(v00) && std::isfinite(v10) && std::isfinite(v01) && std::isfinite(v11)) {
      const double a = fx - ci, b = fy - cj;
      return (1 - a) * (1 - b) * v00 + a * (1 - b) * v10 + (1 - a) * b * v01 + a * b * v11;
    }
  }
  // near the boundary: weighted affine fit of nearby valued points
  std::vector<Vec2> pts;
  std::vector<double> vals;
  const int c = g.cell_of(x);
  const int ci0 = c % g.nx, cj0 = c / g.nx;
  const double rad = 2.0 * g.delta;
  for (int j = cj0 - 2; j <= cj0 + 2; ++j)
    for (int i = ci0 - 2; i <= ci0 + 2; ++i) {
      if (i < 0 || j < 0 || i >= g.nx || j >= g.ny) continue;
      const int lat = j * g.nx + i;
      double v = lattice_value(lat);
      Vec2 p = g.lattice_point(lat);
      if (std::isfinite(v) && (p - x).norm() <= rad) {
        pts.push_back(p);
        vals.push_back(v);
      }
      for (int b : g.bpoint_bins[lat]) {
        if (g.bpoints[b].lattice >= 0) continue;
        if ((g.bpoints[b].x - x).norm() <= rad) {
          pts.push_back(g.bpoints[b].x);
          vals.push_back(g.bpoints[b].value);
        }
      }
    }
  if (pts.empty()) return kNaN;
  for (std::size_t k = 0; k < pts.size(); ++k)
    if ((pts[k] - x).norm() <= 1e-12 * g.delta) return vals[k];
  if (pts.size() < 3) return vals[0];
  Eigen::MatrixXd A(pts.size(), 3);
  Eigen::VectorXd b(pts.size());
  for (std::size_t k = 0; k < pts.size(); ++k) {
    double w = 1.0 / ((pts[k] - x).norm() + 0.05 * g.delta);
    A.row(k) << w, w * (pts[k].x() - x.x()), w * (pts[k].y() - x.y());
    b(k) = w * vals[k];
  }
  Eigen::VectorXd c3 = A.colPivHouseholderQr().solve(b);
  return c3(0);
}

Field Field::from_function(std::shared_ptr<const Grid> grid, const ScalarField& gfun)
{
  Field F;
  F.grid = std::move(grid);
  F.u.resize(F.grid->nodes.size());
  for (std::size_t i = 0; i < F.grid->nodes.size(); ++i) F.u[i] = gfun(F.grid->nodes[i]);
  F.method = "function";
  F.converged = true;
  return F;
}

namespace {

// Shortley-Weller coefficients per unknown and direction.
struct Coefficients {
  std::vector<double> cf, cb;
};

Coefficients coefficients(const Grid& g)
{
  Coefficients c;
  const int K = g.K();
  c.cf.resize(g.nodes.size() * K);
  c.cb.resize(g.nodes.size() * K);
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    for (int k = 0; k < K; ++k) {
      double s = g.step(k);
      double tf = g.arm(int(i), k, 0).frac, tb = g.arm(int(i), k, 1).frac;
      c.cf[i * K + k] = 2.0 / (s * s * tf * (tf + tb));
      c.cb[i * K + k] = 2.0 / (s * s * tb * (tf + tb));
    }
  return c;
}

inline double arm_val(const Grid& g, const Eigen::VectorXd& u, const Arm& a)
{
  return a.node >= 0 ? u[a.node] : g.bpoints[a.bpoint].value;
}

struct SchemeEval {
  Eigen::VectorXd D;      // N*K
  Eigen::VectorXd MA;     // N
  Eigen::VectorXd floor;  // N, rounding bound of MA
  std::vector<int> active;
};

void evaluate_scheme(const Grid& g, const Coefficients& c, const Eigen::VectorXd& u, SchemeEval& e)
{
  const int K = g.K();
  const std::size_t N = g.nodes.size();
  e.D.resize(N * K);
  e.MA.resize(N);
  e.floor.resize(N);
  e.active.resize(N);
  constexpr double eps = std::numeric_limits<double>::epsilon();
  std::vector<double> E(K);
  for (std::size_t i = 0; i < N; ++i) {
    for (int k = 0; k < K; ++k) {
      const std::size_t ik = i * K + k;
      const double uf = arm_val(g, u, g.arm(int(i), k, 0));
      const double ub = arm_val(g, u, g.arm(int(i), k, 1));
      e.D[ik] = c.cf[ik] * (uf - u[i]) + c.cb[ik] * (ub - u[i]);
      E[k] = eps * (c.cf[ik] * (std::abs(uf) + std::abs(u[i])) + c.cb[ik] * (std::abs(ub) + std::abs(u[i])));
    }
    double best = std::numeric_limits<double>::infinity();
    int bp = 0;
    for (std::size_t p = 0; p < g.pairs.size(); ++p) {
      double v = std::max(e.D[i * K + g.pairs[p][0]], 0.0) * std::max(e.D[i * K + g.pairs[p][1]], 0.0);
      if (v < best) {
        best = v;
        bp = int(p);
      }
    }
    e.MA[i] = best;
    e.active[i] = bp;
    const int k0 = g.pairs[bp][0], k1 = g.pairs[bp][1];
    e.floor[i] = 8.0 * (std::max(e.D[i * K + k0], 0.0) * E[k1] + std::max(e.D[i * K + k1], 0.0) * E[k0] + E[k0] * E[k1]);
  }
}

double convexity_margin(const Grid& g, const SchemeEval& e)
{
  double m = std::numeric_limits<double>::infinity();
  const int K = g.K();
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    for (int k = 0; k < K; ++k) {
      double s = g.step(k);
      m = std::min(m, e.D[i * K + k] * s * s);
    }
  return m;
}

using SpMat = Eigen::SparseMatrix<double>;

Eigen::VectorXd poisson_guess(const Grid& g, const Coefficients& c, const Eigen::VectorXd& f)
{
  const int K = g.K();
  const std::size_t N = g.nodes.size();
  std::vector<Eigen::Triplet<double>> T;
  T.reserve(N * 5);
  Eigen::VectorXd rhs(N);
  for (std::size_t i = 0; i < N; ++i) {
    double diag = 0.0;
    rhs[i] = 2.0 * std::sqrt(f[i]);
    for (int k = 0; k < 2; ++k)
      for (int side = 0; side < 2; ++side) {
        const Arm& a = g.arm(int(i), k, side);
        const double w = side == 0 ? c.cf[i * K + k] : c.cb[i * K + k];
        diag -= w;
        if (a.node >= 0)
          T.emplace_back(int(i), a.node, w);
        else
          rhs[i] -= w * g.bpoints[a.bpoint].value;
      }
    T.emplace_back(int(i), int(i), diag);
  }
  SpMat A(N, N);
  A.setFromTriplets(T.begin(), T.end());
  Eigen::SparseLU<SpMat> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) throw SolverError("initial Poisson factorization failed");
  return lu.solve(rhs);
}

// Newton correction: preconditioned BiCGSTAB, sparse LU when it stalls.
bool linear_solve(const SpMat& J, const Eigen::VectorXd& rhs, Eigen::VectorXd& x)
{
  Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<double>> it;
  it.preconditioner().setDroptol(1e-4);
  it.preconditioner().setFillfactor(10);
  it.setTolerance(1e-13);
  it.setMaxIterations(2000);
  it.compute(J);
  if (it.info() == Eigen::Success) {
    x = it.solve(rhs);
    if (it.info() == Eigen::Success) return true;
  }
  Eigen::SparseLU<SpMat> lu;
  lu.compute(J);
  if (lu.info() != Eigen::Success) return false;
  x = lu.solve(rhs);
  return lu.info() == Eigen::Success;
}

// One Gauss-Seidel sweep with the closed-form local solve.
void gauss_seidel_sweep(const Grid& g, const Coefficients& c, const Eigen::VectorXd& f, Eigen::VectorXd& u)
{
  const int K = g.K();
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& pr : g.pairs) {
      double A[2], C[2];
      for (int q = 0; q < 2; ++q) {
        const int k = pr[q];
        const std::size_t ik = i * K + k;
        A[q] = c.cf[ik] * arm_val(g, u, g.arm(int(i), k, 0)) + c.cb[ik] * arm_val(g, u, g.arm(int(i), k, 1));
        C[q] = c.cf[ik] + c.cb[ik];
      }
      const double s = A[0] * C[1] + A[1] * C[0];
      const double d = A[0] * C[1] - A[1] * C[0];
      const double v = (s - std::sqrt(d * d + 4.0 * C[0] * C[1] * f[i])) / (2.0 * C[0] * C[1]);
      best = std::min(best, v);
    }
    u[i] = best;
  }
}

std::string history_tail(const std::vector<double>& h)
{
  std::ostringstream os;
  os << "residual history (last " << std::min<std::size_t>(h.size(), 8) << "):";
  for (std::size_t k = h.size() > 8 ? h.size() - 8 : 0; k < h.size(); ++k) os << " " << h[k];
  return os.str();
}

}  // namespace

Field solve_dirichlet(std::shared_ptr<const Grid> grid, const ScalarField& fun, const SolveOptions& opt)
{
  const Grid& g = *grid;
  const std::size_t N = g.nodes.size();
  const int K = g.K();
  Field F;
  F.grid = grid;
  F.f.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    F.f[i] = fun(g.nodes[i]);
    if (!(F.f[i] > 0)) {
      std::ostringstream os;
      os << "right-hand side must be positive: f = " << F.f[i] << " at (" << g.nodes[i].x() << ", "
         << g.nodes[i].y() << ")";
      throw SolverError(os.str());
    }
  }
  F.f_min = F.f.minCoeff();
  F.f_max = F.f.maxCoeff();
  const double tol = opt.tol > 0 ? opt.tol : 1e-9 * std::max(1.0, F.f_max);
  const Coefficients c = coefficients(g);

  Eigen::VectorXd u = poisson_guess(g, c, F.f);
  SchemeEval e;
  evaluate_scheme(g, c, u, e);
  // residual in excess of the rounding floor of each node
  auto resid = [&](const SchemeEval& s) {
    return std::max(0.0, ((s.MA - F.f).cwiseAbs() - s.floor).maxCoeff());
  };
  double res = resid(e);
  F.history.push_back(res);
  int it = 0;

  if (opt.method == SolveMethod::Newton) {
    F.method = "newton";
    const double eta = 1e-3 * std::sqrt(F.f_min);
    int gs_fallbacks = 0;
    const int newton_max = std::min(opt.max_iterations, 200);
    while (res > tol && it < newton_max) {
      ++it;
      std::vector<Eigen::Triplet<double>> T;
      T.reserve(N * 9);
      Eigen::VectorXd rhs = -(e.MA - F.f);
      for (std::size_t i = 0; i < N; ++i) {
        const auto& pr = g.pairs[e.active[i]];
        double diag = 0.0;
        for (int q = 0; q < 2; ++q) {
          const int k = pr[q];
          const double w = std::max(e.D[i * K + pr[1 - q]], eta);
          const std::size_t ik = i * K + k;
          for (int side = 0; side < 2; ++side) {
            const Arm& a = g.arm(int(i), k, side);
            const double cc = side == 0 ? c.cf[ik] : c.cb[ik];
            diag -= w * cc;
            if (a.node >= 0) T.emplace_back(int(i), a.node, w * cc);
          }
        }
        T.emplace_back(int(i), int(i), diag);
      }
      SpMat J(N, N);
      J.setFromTriplets(T.begin(), T.end());
      bool accepted = false;
      Eigen::VectorXd du;
      if (linear_solve(J, rhs, du)) {
        const double m0 = (e.MA - F.f).squaredNorm();
        double step = 1.0;
        for (int ls = 0; ls < 30; ++ls, step *= 0.5) {
          Eigen::VectorXd un = u + step * du;
          SchemeEval en;
          evaluate_scheme(g, c, un, en);
          if ((en.MA - F.f).squaredNorm() <= (1.0 - 1e-4 * step) * m0) {
            u = std::move(un);
            e = std::move(en);
            accepted = true;
            break;
          }
        }
      }
      if (!accepted) {
        // stalled: a block of monotone sweeps, then resume Newton
        ++gs_fallbacks;
        for (int s = 0; s < 50; ++s) gauss_seidel_sweep(g, c, F.f, u);
        evaluate_scheme(g, c, u, e);
      }
      res = resid(e);
      F.history.push_back(res);
    }
    if (res > tol) {
      // robust fallback
      F.method = "newton+gauss-seidel";
      while (res > tol && it < opt.max_iterations) {
        ++it;
        gauss_seidel_sweep(g, c, F.f, u);
        evaluate_scheme(g, c, u, e);
        res = resid(e);
        if (it % 100 == 0) F.history.push_back(res);
      }
    }
    (void)gs_fallbacks;
  } else {
    F.method = "gauss-seidel";
    while (res > tol && it < opt.max_iterations) {
      ++it;
      gauss_seidel_sweep(g, c, F.f, u);
      evaluate_scheme(g, c, u, e);
      res = resid(e);
      if (it % 100 == 0 || res <= tol) F.history.push_back(res);
    }
  }
  F.u = std::move(u);
  F.residual = res;
  F.iterations = it;
  F.converged = res <= tol;
  F.convexity_margin = convexity_margin(g, e);
  if (!F.converged) {
    std::ostringstream os;
    os << "solver did not converge after " << it << " iterations: residual " << res << " > tol " << tol << "; "
       << history_tail(F.history);
    throw SolverError(os.str());
  }
  return F;
}

Eigen::VectorXd discrete_monge_ampere(const Field& u)
{
  Coefficients c = coefficients(*u.grid);
  SchemeEval e;
  evaluate_scheme(*u.grid, c, u.u, e);
  return e.MA;
}

double second_difference(const Field& F, int i, int k)
{
  const Grid& g = *F.grid;
  const double s = g.step(k);
  const double tf = g.arm(i, k, 0).frac, tb = g.arm(i, k, 1).frac;
  const double uf = F.arm_value(g.arm(i, k, 0)), ub = F.arm_value(g.arm(i, k, 1));
  return 2.0 / (s * s) * ((uf - F.u[i]) / (tf * (tf + tb)) + (ub - F.u[i]) / (tb * (tf + tb)));
}

const char* to_string(Verdict::Status s)
{
  switch (s) {
    case Verdict::Status::Pass: return "pass";
    case Verdict::Status::Fail: return "fail";
    default: return "inapplicable";
  }
}

Verdict comparison_check(const Field& u, const Field& v, double pre_tol)
{
  Verdict r;
  if (!u.grid->same_geometry(*v.grid)) {
    r.message = "fields live on different grids";
    return r;
  }
  const Grid& g = *u.grid;
  for (std::size_t b = 0; b < g.bpoints.size(); ++b)
    if (u.grid->bpoints[b].value > v.grid->bpoints[b].value + 1e-12 * std::max(1.0, std::abs(v.grid->bpoints[b].value))) {
      std::ostringstream os;
      os << "boundary ordering fails at (" << g.bpoints[b].x.x() << ", " << g.bpoints[b].x.y() << ")";
      r.message = os.str();
      return r;
    }
  Eigen::VectorXd mu = discrete_monge_ampere(u), mv = discrete_monge_ampere(v);
  for (Eigen::Index i = 0; i < mu.size(); ++i)
    if (mu[i] < mv[i] - pre_tol * std::max(1.0, mv[i])) {
      std::ostringstream os;
      os << "operator ordering fails at node " << i << ": " << mu[i] << " < " << mv[i];
      r.message = os.str();
      r.where = int(i);
      return r;
    }
  Eigen::VectorXd diff = u.u - v.u;
  Eigen::Index w;
  r.value = diff.size() ? diff.maxCoeff(&w) : 0.0;
  r.where = diff.size() ? int(w) : -1;
  r.value = std::max(r.value, 0.0);
  r.bound = 1e-8;
  r.status = r.value <= r.bound ? Verdict::Status::Pass : Verdict::Status::Fail;
  r.message = "max(u - v) over nodes";
  return r;
}

Verdict alexandrov_check(const Field& u, const AffineFunction& l)
{
  Verdict r;
  const Grid& g = *u.grid;
  const double s = std::max(1.0, u.scale());
  for (const auto& b : g.bpoints)
    if (l(b.x) > b.value + 1e-10 * s) {
      std::ostringstream os;
      os << "plane exceeds boundary data at (" << b.x.x() << ", " << b.x.y() << ")";
      r.message = os.str();
      return r;
    }
  const int n = 2;
  double C = 0.0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    double gap = l(g.nodes[i]) - u.u[i];
    if (gap <= 0) continue;
    double d = g.boundary_distance(g.nodes[i]);
    double c = gap / std::pow(d, 1.0 / n);
    if (c > C) {
      C = c;
      r.where = int(i);
    }
  }
  const ConvexDomain& dom = g.spec->domain;
  const double Lam = u.f.size() ? u.f_max : g.spec->Lambda;
  // a^n <= (n / omega_{n-1}) diam^{n-1} d Lambda |Omega|, omega_1 = 2
  const double omega = 2.0;
  r.value = C;
  r.bound = std::pow(double(n) / omega * std::pow(dom.diameter(), n - 1) * Lam * dom.area(), 1.0 / n);
  r.status = std::isfinite(C) && C <= r.bound ? Verdict::Status::Pass : Verdict::Status::Fail;
  r.message = "C_fit against the Alexandrov constant";
  return r;
}

OracleTriple exact_oracle(const std::string& name, const OracleParams& P)
{
  OracleTriple o;
  o.name = name;
  if (name == "isotropic") {
    o.u = [](const Vec2& x) { return 0.5 * x.squaredNorm(); };
    o.f = [](const Vec2&) { return 1.0; };
    o.hessian = [](const Vec2&) { return Mat2::Identity(); };
  } else if (name == "anisotropic") {
    const double a = P.a;
    if (!(a > 0)) throw SolverError("anisotropic oracle needs a > 0");
    o.u = [a](const Vec2& x) { return 0.5 * (a * x.x() * x.x() + x.y() * x.y() / a); };
    o.f = [](const Vec2&) { return 1.0; };
    o.hessian = [a](const Vec2&) { return Mat2(Eigen::Vector2d(a, 1.0 / a).asDiagonal()); };
  } else if (name == "slid") {
    const double nu = P.nu.x();
    o.u = [nu](const Vec2& x) {
      double s = x.x() + nu * x.y();
      return 0.5 * (s * s + x.y() * x.y());
    };
    o.f = [](const Vec2&) { return 1.0; };
    o.hessian = [nu](const Vec2&) {
      Mat2 H;
      H << 1.0, nu, nu, 1.0 + nu * nu;
      return H;
    };
  } else if (name == "radial-power") {
    const double p = P.p;
    const Vec2 c = P.center;
    if (!(p >= 2)) throw SolverError("radial-power oracle needs p >= 2");
    o.u = [p, c](const Vec2& x) { return std::pow((x - c).norm(), p); };
    o.f = [p, c](const Vec2& x) { return p * p * (p - 1.0) * std::pow((x - c).norm(), 2.0 * p - 4.0); };
    o.hessian = [p, c](const Vec2& x) {
      Vec2 r = x - c;
      double n = r.norm();
      Vec2 e = r / n;
      return Mat2(p * std::pow(n, p - 2.0) * (Mat2::Identity() + (p - 2.0) * e * e.transpose()));
    };
  } else if (name == "perturbed") {
    const double sg = P.sigma, al = P.alpha;
    o.f = [sg, al](const Vec2& x) { return 1.0 + sg * std::pow(x.norm(), al); };
    if (!P.reference_spec) throw SolverError("perturbed oracle needs a reference problem");
    auto grid = discretize(P.reference_spec, P.reference_delta, 2);
    auto field = std::make_shared<Field>(solve_dirichlet(grid, o.f));
    o.u = [field](const Vec2& x) { return field->evaluate(x); };
    o.phi = [field](const Vec2& x) { return field->evaluate(x); };
    o.hessian = [](const Vec2&) { return Mat2::Constant(kNaN); };
    return o;
  } else {
    throw SolverError("unknown oracle '" + name + "'");
  }
  o.phi = o.u;
  return o;
}

namespace {

void put_le(std::ofstream& os, double v)
{
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  unsigned char b[8];
  for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(bits >> (8 * k));
  os.write(reinterpret_cast<const char*>(b), 8);
}

double get_le(std::ifstream& is)
{
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw SolverError("checkpoint truncated");
  std::uint64_t bits = 0;
  for (int k = 0; k < 8; ++k) bits |= std::uint64_t(b[k]) << (8 * k);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

void write_checkpoint(const Field& u, const std::string& path)
{
  std::ofstream os(path, std::ios::binary);
  if (!os) throw SolverError("cannot open checkpoint for writing: " + path);
  const Grid& g = *u.grid;
  put_le(os, g.nx);
  put_le(os, g.ny);
  put_le(os, g.delta);
  put_le(os, g.i0 * g.delta);
  put_le(os, g.j0 * g.delta);
  put_le(os, (g.i0 + g.nx - 1) * g.delta);
  put_le(os, (g.j0 + g.ny - 1) * g.delta);
  for (int lat = 0; lat < g.nx * g.ny; ++lat) put_le(os, u.lattice_value(lat));
  if (!os) throw SolverError("checkpoint write failed: " + path);
}

Checkpoint read_checkpoint(const std::string& path)
{
  std::ifstream is(path, std::ios::binary);
  if (!is) throw SolverError("cannot open checkpoint: " + path);
  Checkpoint c;
  c.nx = int(get_le(is));
  c.ny = int(get_le(is));
  c.delta = get_le(is);
  c.lo.x() = get_le(is);
  c.lo.y() = get_le(is);
  c.hi.x() = get_le(is);
  c.hi.y() = get_le(is);
  if (c.nx <= 0 || c.ny <= 0) throw SolverError("checkpoint header is corrupt");
  c.values.resize(std::size_t(c.nx) * c.ny);
  for (auto& v : c.values) v = get_le(is);
  return c;
}

}  // namespace mongelab
