#pragma once

#include "mongelab/domain.hpp"

#include <Eigen/Sparse>

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace mongelab {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class NodeKind : std::uint8_t { Exterior, Interior, Boundary, NearBoundary };

// A stencil arm ends either at an unknown (node >= 0) or at a boundary point.
struct Arm {
  int node = -1;
  int bpoint = -1;
  double frac = 1.0;  // arm length in units of the full stencil step
};

struct BoundaryPoint {
  Vec2 x;
  double value = 0.0;
  std::size_t segment = 0;
  double s = 0.0;
  int lattice = -1;  // lattice index when the point is a grid node
};

class Grid {
 public:
  double delta = 0.0;
  int width = 1;
  int i0 = 0, j0 = 0;  // lattice index of the lower-left node; node (i,j) sits at (i,j)*delta
  int nx = 0, ny = 0;
  double exclusion = 0.1;  // nodes closer than exclusion*delta to the boundary carry no unknown

  std::vector<NodeKind> kind;       // per lattice node
  std::vector<int> unknown_of;      // lattice -> unknown or -1
  std::vector<int> bpoint_of;       // lattice -> boundary point or -1
  std::vector<int> lattice_of;      // unknown -> lattice
  std::vector<Vec2> nodes;          // unknown positions
  std::vector<BoundaryPoint> bpoints;
  std::vector<Eigen::Vector2i> dirs;
  std::vector<std::array<int, 2>> pairs;
  std::vector<Arm> arms;            // (unknown * K + k) * 2 + side, side 0 = +v, 1 = -v
  std::shared_ptr<const ProblemSpec> spec;

  int K() const { return int(dirs.size()); }
  std::size_t unknowns() const { return nodes.size(); }
  const Arm& arm(int i, int k, int side) const { return arms[(std::size_t(i) * dirs.size() + k) * 2 + side]; }
  int lattice_index(int i, int j) const { return (j - j0) * nx + (i - i0); }
  Vec2 lattice_point(int lat) const { return delta * Vec2(i0 + lat % nx, j0 + lat / nx); }
  double step(int k) const { return delta * dirs[k].cast<double>().norm(); }
  Vec2 arm_point(int i, int k, int side) const;
  std::size_t interior_count() const { return nodes.size(); }

  // Lattice-cell bins of boundary segments and boundary points; cell c covers
  // [i, i+1) x [j, j+1) in units of delta.
  std::vector<std::vector<int>> segment_bins, bpoint_bins;
  int cell_of(const Vec2& x) const;
  double boundary_distance(const Vec2& x) const;
  ConvexDomain::Hit ray_exit(const Vec2& x, const Vec2& d) const;

  bool same_geometry(const Grid& o) const;
  // Same geometry with boundary values taken from new data (envelope applied).
  std::shared_ptr<Grid> with_boundary_data(const BoundaryFunction& phi) const;
};

std::shared_ptr<const Grid> discretize(std::shared_ptr<const ProblemSpec> spec, double delta, int stencil_width = 2);

// Smallest spacing accepted for a spec: at least 8 nodes across the inner ball.
double max_feasible_delta(const ProblemSpec& spec);

struct Field {
  std::shared_ptr<const Grid> grid;
  Eigen::VectorXd u;            // unknown values
  Eigen::VectorXd f;            // right-hand side at unknowns (empty when not from a solve)
  double residual = 0.0;
  bool converged = false;
  int iterations = 0;
  std::string method;
  std::vector<double> history;
  double convexity_margin = 0.0;  // min undivided second difference
  double f_min = 0.0, f_max = 0.0;

  double bvalue(int b) const { return grid->bpoints[b].value; }
  double arm_value(const Arm& a) const { return a.node >= 0 ? u[a.node] : bvalue(a.bpoint); }
  double scale() const;
  bool convexity_certified() const { return convexity_margin >= -1e-8 * std::max(1.0, scale()); }

  // Value at a lattice node or NaN when the node carries none.
  double lattice_value(int lat) const;
  // Interpolated value at an arbitrary point of the closed domain.
  double evaluate(const Vec2& x) const;

  static Field from_function(std::shared_ptr<const Grid> grid, const ScalarField& g);
};

enum class SolveMethod { Newton, GaussSeidel };

struct SolveOptions {
  SolveMethod method = SolveMethod::Newton;
  double tol = -1.0;          // default 1e-9 max(1, max f)
  int max_iterations = 100000;
};

Field solve_dirichlet(std::shared_ptr<const Grid> grid, const ScalarField& f, const SolveOptions& opt = {});

// MA_h of a field at every unknown.
Eigen::VectorXd discrete_monge_ampere(const Field& u);
// Second differences D_k (divided) at node i.
double second_difference(const Field& u, int i, int k);

struct Verdict {
  enum class Status { Pass, Fail, Inapplicable };
  Status status = Status::Inapplicable;
  double value = 0.0;       // max violation or fitted constant
  double bound = 0.0;
  int where = -1;           // unknown index of the worst node
  std::string message;
  bool pass() const { return status == Status::Pass; }
};

const char* to_string(Verdict::Status s);

// u <= v under the discrete comparison hypotheses.
Verdict comparison_check(const Field& u, const Field& v, double pre_tol = 1e-7);

// smallest C with u - l >= -C d^{1/n}
Verdict alexandrov_check(const Field& u, const AffineFunction& l);

struct OracleTriple {
  std::string name;
  ScalarField u;
  ScalarField f;
  ScalarField phi;
  std::function<Mat2(const Vec2&)> hessian;
};

struct OracleParams {
  double a = 2.0;             // anisotropic
  Vec2 nu = Vec2(1.0, 0.0);   // slid
  double p = 3.0;             // radial-power exponent
  Vec2 center = Vec2(0.0, -0.5);
  double sigma = 0.5, alpha = 0.5;  // perturbed
  std::shared_ptr<const ProblemSpec> reference_spec;  // perturbed: domain + data for the reference solve
  double reference_delta = 1.0 / 128.0;
};

OracleTriple exact_oracle(const std::string& name, const OracleParams& params = {});

// Checkpoint: 7 little-endian doubles (nx, ny, delta, xmin, ymin, xmax, ymax)
// followed by nx*ny row-major doubles, NaN where a lattice node has no value.
void write_checkpoint(const Field& u, const std::string& path);
struct Checkpoint {
  int nx = 0, ny = 0;
  double delta = 0.0;
  Vec2 lo, hi;
  std::vector<double> values;
};
Checkpoint read_checkpoint(const std::string& path);

}  // namespace mongelab
