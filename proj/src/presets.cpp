#include "mongelab/lab.hpp"

#include <utility>

namespace mongelab {

namespace {

const std::vector<std::pair<const char*, const char*>>& presets()
{
  static const std::vector<std::pair<const char*, const char*>> p = {
      {"isotropic", R"json({
  "name": "isotropic",
  "description": "u = |x|^2/2 on the unit half-disk; oracle, sections, lower and upper barriers",
  "domain": {"kind": "half-disk", "radius": 1.0},
  "boundary_data": {"type": "oracle", "name": "isotropic"},
  "rhs": 1.0,
  "exact": {"type": "oracle", "name": "isotropic"},
  "hypothesis_case": 2,
  "verifiers": ["oracle", "separation", "sections", "doubling", "barriers", "slope-bounds", "comparison"],
  "expect": {"oracle_error": 5e-3, "area_ratio": 3.141592653589793, "area_ratio_tol": 0.02},
  "barriers": [
    {"name": "TW-lower-v", "params": {"mu": 0.25, "Lambda": 1.0, "C": 0.0},
     "region": {"name": "slab", "max_xn": "rho"},
     "search": {"param": "C", "larger_is_safer": true, "lo": 0.0, "hi": 1.0}},
    {"name": "TW-upper-w", "params": {"h": 0.0625, "C1": 0.8908987181403393, "eps": 1e-3, "Lambda": 1.0, "shift": 0.0},
     "region": {"name": "section", "sublevel": 0.0625},
     "search": {"param": "shift", "larger_is_safer": true, "lo": 0.0, "hi": 0.1}}
  ],
  "slope_bounds": {"k": 0.5, "points": [[0.0, 0.0], [0.25, 0.0]]},
  "comparison": {"pairs": 20, "delta": 0.03125}
})json"},
      {"anisotropic", R"json({
  "name": "anisotropic",
  "description": "u = (a x1^2 + x2^2/a)/2 with a = 2 on the unit half-disk",
  "domain": {"kind": "half-disk", "radius": 1.0},
  "boundary_data": {"type": "oracle", "name": "anisotropic", "a": 2.0},
  "rhs": 1.0,
  "exact": {"type": "oracle", "name": "anisotropic", "a": 2.0},
  "hypothesis_case": 2,
  "h_ladder": {"from": 3, "to": 12},
  "verifiers": ["oracle", "separation", "sections", "doubling", "slope-bounds"],
  "slope_bounds": {"k": 0.5, "points": [[0.0, 0.0]]}
})json"},
      {"slid", R"json({
  "name": "slid",
  "description": "sheared quadratic u = ((x1 + x2/2)^2 + x2^2)/2 on the unit half-disk",
  "domain": {"kind": "half-disk", "radius": 1.0},
  "boundary_data": {"type": "oracle", "name": "slid", "nu": [0.5, 0.0]},
  "rhs": 1.0,
  "exact": {"type": "oracle", "name": "slid", "nu": [0.5, 0.0]},
  "hypothesis_case": 2,
  "verifiers": ["oracle", "separation", "sections", "doubling"]
})json"},
      {"prop1-case1", R"json({
  "name": "prop1-case1",
  "description": "zero data on a disk touching the origin (linear data, uniformly convex boundary)",
  "domain": {"kind": "disk", "radius": 1.0},
  "boundary_data": 0.0,
  "rhs": 1.0,
  "exact": {"type": "poly", "terms": [{"c": 0.5, "p": [2, 0]}, {"c": 0.5, "p": [0, 2]}, {"c": -1.0, "p": [0, 1]}]},
  "hypothesis_case": 1,
  "verifiers": ["oracle", "separation", "sections", "doubling"]
})json"},
      {"prop1-case2", R"json({
  "name": "prop1-case2",
  "description": "flat edge with quadratic data x1^2, data 1 on the arc",
  "domain": {"kind": "half-disk", "radius": 1.0},
  "boundary_data": {"type": "flat-edge", "edge": {"type": "poly", "terms": [{"c": 1.0, "p": [2, 0]}]}, "elsewhere": 1.0},
  "rhs": 1.0,
  "hypothesis_case": 2,
  "verifiers": ["separation", "sections", "doubling"]
})json"},
      {"prop1-case3", R"json({
  "name": "prop1-case3",
  "description": "ellipse with smooth cubic data (C3 data, uniformly convex boundary)",
  "domain": {"kind": "ellipse", "semi_axes": [1.5, 1.0]},
  "boundary_data": {"type": "poly", "terms": [{"c": 0.5, "p": [2, 0]}, {"c": 0.5, "p": [0, 2]}, {"c": 0.2, "p": [3, 0]}, {"c": 0.1, "p": [1, 1]}]},
  "rhs": 1.0,
  "hypothesis_case": 3,
  "verifiers": ["separation", "sections", "doubling"]
})json"},
      {"pogorelov-anchor", R"json({
  "name": "pogorelov-anchor",
  "description": "half-disk of radius sqrt 2 with |x1|^2/2 on the flat edge and 1 on the arc; solution |x|^2/2",
  "domain": {"kind": "half-disk", "radius": 1.4142135623730951},
  "boundary_data": {"type": "flat-edge", "edge": {"type": "poly", "terms": [{"c": 0.5, "p": [2, 0]}]}, "elsewhere": 1.0},
  "rhs": 1.0,
  "exact": {"type": "oracle", "name": "isotropic"},
  "hypothesis_case": 2,
  "verifiers": ["oracle", "separation", "sections", "pogorelov", "barriers", "slope-bounds"],
  "pogorelov": {"k": 0.5},
  "expect": {"pogorelov_identity_tol": 1e-4},
  "barriers": [
    {"name": "pogorelov-mixed-v", "params": {"x0": 0.0, "gamma1": 1.0, "gamma2": 0.0},
     "region": {"name": "D", "sublevel": 0.125},
     "search": {"param": "gamma2", "larger_is_safer": true, "lo": 0.0, "hi": 1.0},
     "fd_box": [[-1.0, 0.0], [1.0, 1.0]]},
    {"name": "pogorelov-mixed-v", "params": {"x0": 0.125, "gamma1": 1.0, "gamma2": 0.0, "ref_c": -0.0078125, "ref_p1": 0.125},
     "region": {"name": "D", "sublevel": 0.125},
     "search": {"param": "gamma2", "larger_is_safer": true, "lo": 0.0, "hi": 1.0},
     "fd_box": [[-1.0, 0.0], [1.0, 1.0]]}
  ],
  "slope_bounds": {"k": 0.5, "points": [[0.0, 0.0]]}
})json"},
      {"pogorelov-anisotropic", R"json({
  "name": "pogorelov-anisotropic",
  "description": "half-disk of radius sqrt 2 with x1^2/4 + x1^4/8 on the flat edge and 1 on the arc",
  "domain": {"kind": "half-disk", "radius": 1.4142135623730951},
  "boundary_data": {"type": "flat-edge", "edge": {"type": "poly", "terms": [{"c": 0.25, "p": [2, 0]}, {"c": 0.125, "p": [4, 0]}]}, "elsewhere": 1.0},
  "rhs": 1.0,
  "hypothesis_case": 2,
  "verifiers": ["separation", "sections", "pogorelov", "slope-bounds"],
  "pogorelov": {"k": 0.5},
  "slope_bounds": {"k": 0.5, "points": [[0.0, 0.0]]}
})json"},
      {"theorem-m3", R"json({
  "name": "theorem-m3",
  "description": "zero data on a disk with Hoelder right-hand side 1 + |x|^(1/2)/2",
  "domain": {"kind": "disk", "radius": 1.0},
  "boundary_data": 0.0,
  "rhs": {"type": "holder", "base": 1.0, "sigma": 0.5, "alpha": 0.5},
  "holder": {"alpha": 0.5, "M": 0.5},
  "delta": 0.00390625,
  "hypothesis_case": 1,
  "verifiers": ["separation", "sections", "doubling", "regularity"]
})json"},
      {"rough-f", R"json({
  "name": "rough-f",
  "description": "Hoelder right-hand side 1 + |x|^(1/2)/2 on the unit half-disk, data with the matching r^(5/2) trace",
  "domain": {"kind": "half-disk", "radius": 1.0},
  "boundary_data": {"type": "sum", "terms": [
    {"type": "oracle", "name": "isotropic"},
    {"type": "polar", "c": 0.08, "p": 2.5, "a": [1.0, -1.0, -1.0]}]},
  "rhs": {"type": "holder", "base": 1.0, "sigma": 0.5, "alpha": 0.5},
  "holder": {"alpha": 0.5, "M": 0.5},
  "delta": 0.00390625,
  "hypothesis_case": 2,
  "verifiers": ["separation", "sections", "regularity"],
  "regularity": {"constraints": ["free", "boundary-matched"]},
  "expect": {"alpha": [0.35, 0.65]}
})json"},
      {"smooth", R"json({
  "name": "smooth",
  "description": "f = 1 on the unit half-disk with a harmonic cubic perturbation of |x|^2/2",
  "domain": {"kind": "half-disk", "radius": 1.0},
  "boundary_data": {"type": "poly", "terms": [{"c": 0.5, "p": [2, 0]}, {"c": 0.5, "p": [0, 2]}, {"c": 0.1, "p": [3, 0]}, {"c": -0.3, "p": [1, 2]}]},
  "rhs": 1.0,
  "delta": 0.00390625,
  "hypothesis_case": 2,
  "verifiers": ["separation", "sections", "regularity"],
  "regularity": {"constraints": ["free", "boundary-matched"]},
  "expect": {"min_slope": 2.8}
})json"},
      {"cubic-flat", R"json({
  "name": "cubic-flat",
  "description": "negative control: |x1|^3 + x2 has no quadratic separation at the origin",
  "domain": {"kind": "half-disk", "radius": 1.0},
  "boundary_data": {"type": "poly", "terms": [{"c": 1.0, "p": [3, 0], "abs": true}, {"c": 1.0, "p": [0, 1]}]},
  "rhs": 1.0,
  "verifiers": ["separation", "sections"],
  "expect": {"separation": false}
})json"},
      {"holder-barrier", R"json({
  "name": "holder-barrier",
  "description": "radial and perturbation barriers against a Hoelder right-hand side",
  "domain": {"kind": "half-disk", "radius": 1.0},
  "boundary_data": {"type": "sum", "terms": [
    {"type": "oracle", "name": "isotropic"},
    {"type": "poly", "terms": [{"c": 0.002, "p": [0, 0]}, {"c": 0.002, "p": [1, 0]}]}]},
  "rhs": {"type": "holder", "base": 1.0, "sigma": 0.5, "alpha": 0.5},
  "holder": {"alpha": 0.5, "M": 0.5},
  "verifiers": ["separation", "barriers"],
  "barriers": [
    {"name": "radial-phi", "params": {"C0": 1.0, "scale": 0.2, "shift": 0.0},
     "region": {"name": "annulus", "annulus": {"center": [0.0, -0.25], "in": 0.25, "out": 0.5}},
     "search": {"param": "shift", "larger_is_safer": true, "lo": 0.0, "hi": 1.0},
     "fd_box": [[-0.5, -0.75], [0.5, 0.25]]},
    {"name": "phi-y", "params": {"C0": 1.0, "eps": 0.1, "delta": 0.1, "C1": 0.0},
     "region": {"name": "annulus", "annulus": {"center": [0.0, -0.25], "in": 0.25, "out": 0.5}},
     "search": {"param": "C1", "larger_is_safer": true, "lo": 1e-6, "hi": 1.0},
     "fd_box": [[-0.5, -0.75], [0.5, 0.25]]}
  ]
})json"},
  };
  return p;
}

}  // namespace

std::vector<std::string> preset_names()
{
  std::vector<std::string> n;
  for (const auto& [name, text] : presets()) n.emplace_back(name);
  return n;
}

Json preset_config(const std::string& name)
{
  for (const auto& [n, text] : presets())
    if (name == n) return Json::parse(text);
  throw ConfigError("unknown preset '" + name + "'");
}

}  // namespace mongelab
