#include "mongelab/lab.hpp"

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <cstring>

namespace mongelab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void fail(const std::string& path, const std::string& msg) { throw ConfigError(path + ": " + msg); }

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string join(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

void check_keys(const Json& j, const std::string& path, std::initializer_list<const char*> allowed)
{
  if (!j.is_object()) fail(path, "expected an object");
  for (const auto& [key, v] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) fail(join(path, key), "unknown key");
  }
}

const Json& require(const Json& j, const std::string& path, const char* key)
{
  if (!j.contains(key)) fail(join(path, key), "missing required key");
  return j.at(key);
}

double as_number(const Json& j, const std::string& path)
{
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

double number_or(const Json& j, const std::string& path, const char* key, double dflt)
{
  return j.contains(key) ? as_number(j.at(key), join(path, key)) : dflt;
}

bool bool_or(const Json& j, const std::string& path, const char* key, bool dflt)
{
  if (!j.contains(key)) return dflt;
  if (!j.at(key).is_boolean()) fail(join(path, key), "expected true or false");
  return j.at(key).get<bool>();
}

std::string string_of(const Json& j, const std::string& path)
{
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

Vec2 as_vec2(const Json& j, const std::string& path)
{
  if (!j.is_array() || j.size() != 2) fail(path, "expected a pair [x, y]");
  return Vec2(as_number(j[0], join(path, 0)), as_number(j[1], join(path, 1)));
}

std::vector<double> as_numbers(const Json& j, const std::string& path)
{
  if (!j.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> v;
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(as_number(j[i], join(path, i)));
  return v;
}

std::map<std::string, double> as_params(const Json& j, const std::string& path)
{
  if (!j.is_object()) fail(path, "expected an object of numbers");
  std::map<std::string, double> p;
  for (const auto& [key, v] : j.items()) p[key] = as_number(v, join(path, key));
  return p;
}

// Non-finite doubles are written as strings so the report stays valid JSON and round-trips.
Json num(double x)
{
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

double get_num(const Json& j)
{
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  return kNaN;
}

Json vec(const Vec2& v) { return Json::array({num(v.x()), num(v.y())}); }
Vec2 get_vec(const Json& j) { return Vec2(get_num(j.at(0)), get_num(j.at(1))); }
Json mat(const Mat2& m) { return Json::array({vec(m.row(0).transpose()), vec(m.row(1).transpose())}); }
Mat2 get_mat(const Json& j)
{
  Mat2 m;
  m.row(0) = get_vec(j.at(0)).transpose();
  m.row(1) = get_vec(j.at(1)).transpose();
  return m;
}

Json nums(const std::vector<double>& v)
{
  Json a = Json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

std::vector<double> get_nums(const Json& j)
{
  std::vector<double> v;
  for (const auto& x : j) v.push_back(get_num(x));
  return v;
}

Json params_json(const std::map<std::string, double>& p)
{
  Json j = Json::object();
  for (const auto& [k, v] : p) j[k] = num(v);
  return j;
}

std::map<std::string, double> get_params(const Json& j)
{
  std::map<std::string, double> p;
  for (const auto& [k, v] : j.items()) p[k] = get_num(v);
  return p;
}

// ---------------------------------------------------------------- expressions

ScalarField sum_of(std::vector<ScalarField> terms)
{
  return [terms = std::move(terms)](const Vec2& x) {
    double s = 0.0;
    for (const auto& t : terms) s += t(x);
    return s;
  };
}

double ipow(double x, double p) { return p == 0.0 ? 1.0 : std::pow(x, p); }

}  // namespace

ScalarField parse_expression(const Json& j, const std::string& path)
{
  if (j.is_number()) {
    const double c = j.get<double>();
    return [c](const Vec2&) { return c; };
  }
  if (!j.is_object()) fail(path, "expected a number or an expression object");
  const std::string type = string_of(require(j, path, "type"), join(path, "type"));

  if (type == "constant") {
    check_keys(j, path, {"type", "value"});
    const double c = as_number(require(j, path, "value"), join(path, "value"));
    return [c](const Vec2&) { return c; };
  }
  if (type == "poly") {
    check_keys(j, path, {"type", "terms"});
    const Json& terms = require(j, path, "terms");
    if (!terms.is_array() || terms.empty()) fail(join(path, "terms"), "expected a non-empty array");
    struct Mono {
      double c;
      double i, k;
      bool abs;
    };
    std::vector<Mono> m;
    for (std::size_t t = 0; t < terms.size(); ++t) {
      const std::string tp = join(join(path, "terms"), t);
      check_keys(terms[t], tp, {"c", "p", "abs"});
      const Vec2 p = as_vec2(require(terms[t], tp, "p"), join(tp, "p"));
      const bool ab = bool_or(terms[t], tp, "abs", false);
      if (p.minCoeff() < 0) fail(join(tp, "p"), "powers must be non-negative");
      if (!ab && (p.x() != std::floor(p.x()) || p.y() != std::floor(p.y())))
        fail(join(tp, "p"), "fractional powers need \"abs\": true");
      m.push_back({as_number(require(terms[t], tp, "c"), join(tp, "c")), p.x(), p.y(), ab});
    }
    return [m](const Vec2& x) {
      double s = 0.0;
      for (const auto& t : m) {
        const double a = t.abs ? std::abs(x.x()) : x.x(), b = t.abs ? std::abs(x.y()) : x.y();
        s += t.c * ipow(a, t.i) * ipow(b, t.k);
      }
      return s;
    };
  }
  if (type == "polar") {
    check_keys(j, path, {"type", "c", "p", "a"});
    const double c = as_number(require(j, path, "c"), join(path, "c"));
    const double p = as_number(require(j, path, "p"), join(path, "p"));
    const std::vector<double> a = as_numbers(require(j, path, "a"), join(path, "a"));
    if (a.size() != 3) fail(join(path, "a"), "expected three coefficients [a0, a1, a2]");
    if (!(p > 0)) fail(join(path, "p"), "power must be positive");
    return [c, p, a](const Vec2& x) {
      const double r = x.norm();
      if (r == 0.0) return 0.0;
      const double th = std::atan2(std::max(x.y(), 0.0), x.x());
      return c * std::pow(r, p) * (a[0] + a[1] * std::cos(p * th) + a[2] * std::sin(p * th));
    };
  }
  if (type == "holder") {
    check_keys(j, path, {"type", "base", "sigma", "alpha", "center"});
    const double base = number_or(j, path, "base", 1.0);
    const double sigma = as_number(require(j, path, "sigma"), join(path, "sigma"));
    const double alpha = as_number(require(j, path, "alpha"), join(path, "alpha"));
    const Vec2 c = j.contains("center") ? as_vec2(j.at("center"), join(path, "center")) : Vec2::Zero();
    if (!(alpha > 0 && alpha <= 1)) fail(join(path, "alpha"), "exponent must lie in (0, 1]");
    return [base, sigma, alpha, c](const Vec2& x) { return base + sigma * std::pow((x - c).norm(), alpha); };
  }
  if (type == "flat-edge") {
    check_keys(j, path, {"type", "edge", "elsewhere", "tol"});
    ScalarField edge = parse_expression(require(j, path, "edge"), join(path, "edge"));
    ScalarField other = parse_expression(require(j, path, "elsewhere"), join(path, "elsewhere"));
    const double tol = number_or(j, path, "tol", 1e-12);
    return [edge, other, tol](const Vec2& x) { return x.y() <= tol ? edge(x) : other(x); };
  }
  if (type == "sum") {
    check_keys(j, path, {"type", "terms"});
    const Json& terms = require(j, path, "terms");
    if (!terms.is_array() || terms.empty()) fail(join(path, "terms"), "expected a non-empty array");
    std::vector<ScalarField> t;
    for (std::size_t i = 0; i < terms.size(); ++i) t.push_back(parse_expression(terms[i], join(join(path, "terms"), i)));
    return sum_of(std::move(t));
  }
  if (type == "oracle") {
    check_keys(j, path, {"type", "name", "field", "a", "nu", "p", "center"});
    OracleParams P;
    P.a = number_or(j, path, "a", P.a);
    if (j.contains("nu")) P.nu = as_vec2(j.at("nu"), join(path, "nu"));
    P.p = number_or(j, path, "p", P.p);
    if (j.contains("center")) P.center = as_vec2(j.at("center"), join(path, "center"));
    const std::string name = string_of(require(j, path, "name"), join(path, "name"));
    const std::string field = j.contains("field") ? string_of(j.at("field"), join(path, "field")) : "u";
    if (field != "u" && field != "f") fail(join(path, "field"), "expected \"u\" or \"f\"");
    if (name == "perturbed") fail(join(path, "name"), "the perturbed oracle has no closed form");
    OracleTriple o;
    try {
      o = exact_oracle(name, P);
    } catch (const SolverError& e) {
      fail(join(path, "name"), e.what());
    }
    return field == "u" ? o.u : o.f;
  }
  fail(join(path, "type"), "unknown expression type '" + type + "'");
}

// ---------------------------------------------------------------- scenario

bool Scenario::runs(const std::string& v) const
{
  return std::find(verifiers.begin(), verifiers.end(), v) != verifiers.end();
}

namespace {

const std::vector<std::string> kVerifiers = {"oracle",     "separation", "sections", "doubling",    "regularity",
                                             "pogorelov", "barriers",   "slope-bounds", "comparison"};

std::vector<double> parse_ladder(const Json& j, const std::string& path, bool radius)
{
  std::vector<double> v;
  if (j.is_object()) {
    if (radius) {
      check_keys(j, path, {"r0", "from", "to"});
      v = radius_ladder(number_or(j, path, "r0", 0.5), int(number_or(j, path, "from", 1)),
                        int(number_or(j, path, "to", 8)));
    } else {
      check_keys(j, path, {"from", "to"});
      v = dyadic_ladder(int(number_or(j, path, "from", 2)), int(number_or(j, path, "to", 12)));
    }
  } else {
    v = as_numbers(j, path);
  }
  if (v.empty()) fail(path, "ladder is empty");
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0)) fail(join(path, i), "ladder levels must be positive");
    if (i > 0 && !(v[i] < v[i - 1])) fail(join(path, i), "ladder must be sorted strictly descending");
  }
  return v;
}

void validate_sections(const Json& j)
{
  static const std::set<std::string> top = {
      "name",       "description", "domain",     "boundary_data", "rhs",          "bounds",     "holder",
      "x0",         "delta",       "stencil_width", "solver",     "h_ladder",     "r_ladder",   "seed",
      "verifiers",  "exact",       "hypothesis_case", "expect",   "doubling_c0",  "regularity", "pogorelov",
      "barriers",   "slope_bounds", "comparison", "resolution_floor"};
  if (!j.is_object()) fail("<root>", "config must be an object");
  for (const auto& [key, v] : j.items())
    if (!top.count(key)) fail(key, "unknown key");

  if (j.contains("domain")) {
    check_keys(j.at("domain"), "domain", {"kind", "radius", "semi_axes", "vertices", "anchor", "samples"});
  }
  if (j.contains("bounds")) check_keys(j.at("bounds"), "bounds", {"lambda", "Lambda"});
  if (j.contains("holder")) check_keys(j.at("holder"), "holder", {"alpha", "M"});
  if (j.contains("solver")) check_keys(j.at("solver"), "solver", {"method", "tol", "max_iterations"});
  if (j.contains("expect"))
    check_keys(j.at("expect"), "expect",
               {"oracle_error", "separation", "volume_slope_tol", "area_ratio", "area_ratio_tol", "b_ratio_tol",
                "alpha", "min_slope", "pogorelov_identity_tol", "pogorelov_eig", "comparison_tol"});
  if (j.contains("regularity")) check_keys(j.at("regularity"), "regularity", {"constraints"});
  if (j.contains("pogorelov")) check_keys(j.at("pogorelov"), "pogorelov", {"k", "c0"});
  if (j.contains("slope_bounds")) check_keys(j.at("slope_bounds"), "slope_bounds", {"k", "points"});
  if (j.contains("comparison")) check_keys(j.at("comparison"), "comparison", {"pairs", "delta"});
}

}  // namespace

Scenario scenario_from_json(const Json& j)
{
  validate_sections(j);
  Scenario s;
  s.config = j;
  s.name = string_of(require(j, "", "name"), "name");
  if (s.name.empty() || s.name.find_first_of("/\\ ") != std::string::npos)
    fail("name", "must be non-empty without spaces or path separators");

  const Json& dom = require(j, "", "domain");
  const std::string kind = string_of(require(dom, "domain", "kind"), "domain.kind");
  if (kind != "half-disk" && kind != "disk" && kind != "polygon" && kind != "ellipse")
    fail("domain.kind", "expected half-disk, disk, polygon or ellipse");
  if (dom.contains("samples") && !(dom.at("samples").is_string() && dom.at("samples") == "auto")) {
    const double n = as_number(dom.at("samples"), "domain.samples");
    if (!(n >= 16)) fail("domain.samples", "need at least 16 samples");
  }
  parse_expression(require(j, "", "boundary_data"), "boundary_data");
  parse_expression(require(j, "", "rhs"), "rhs");
  if (j.contains("exact")) parse_expression(j.at("exact"), "exact");

  s.delta = number_or(j, "", "delta", s.delta);
  if (!(s.delta > 0 && s.delta < 1)) fail("delta", "grid spacing must lie in (0, 1)");
  s.stencil_width = int(number_or(j, "", "stencil_width", 2));
  if (s.stencil_width != 1 && s.stencil_width != 2) fail("stencil_width", "expected 1 or 2");
  s.h_ladder = j.contains("h_ladder") ? parse_ladder(j.at("h_ladder"), "h_ladder", false) : dyadic_ladder();
  s.r_ladder = j.contains("r_ladder") ? parse_ladder(j.at("r_ladder"), "r_ladder", true) : radius_ladder();
  if (j.contains("x0")) s.x0 = as_vec2(j.at("x0"), "x0");
  if (j.contains("seed")) {
    const double sd = as_number(j.at("seed"), "seed");
    if (sd < 0 || sd != std::floor(sd) || sd > 4294967295.0) fail("seed", "expected a non-negative integer");
    s.seed = unsigned(sd);
  }
  if (j.contains("hypothesis_case")) {
    const double c = as_number(j.at("hypothesis_case"), "hypothesis_case");
    if (c != 1 && c != 2 && c != 3) fail("hypothesis_case", "expected 1, 2 or 3");
  }
  if (j.contains("verifiers")) {
    const Json& v = j.at("verifiers");
    if (!v.is_array()) fail("verifiers", "expected an array of names");
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string name = string_of(v[i], join("verifiers", i));
      if (std::find(kVerifiers.begin(), kVerifiers.end(), name) == kVerifiers.end())
        fail(join("verifiers", i), "unknown verifier '" + name + "'");
      s.verifiers.push_back(name);
    }
  } else {
    s.verifiers = {"separation", "sections"};
    if (j.contains("exact")) s.verifiers.insert(s.verifiers.begin(), "oracle");
  }
  if (s.runs("oracle") && !j.contains("exact")) fail("verifiers", "oracle verifier needs an \"exact\" expression");
  if (s.runs("pogorelov") && !j.contains("pogorelov")) fail("verifiers", "pogorelov verifier needs a \"pogorelov\" block");
  if (s.runs("slope-bounds") && !j.contains("slope_bounds"))
    fail("verifiers", "slope-bounds verifier needs a \"slope_bounds\" block");
  if (s.runs("barriers") && !j.contains("barriers")) fail("verifiers", "barriers verifier needs a \"barriers\" list");

  if (j.contains("barriers")) {
    const Json& bl = j.at("barriers");
    if (!bl.is_array()) fail("barriers", "expected an array");
    for (std::size_t i = 0; i < bl.size(); ++i) {
      const std::string p = join("barriers", i);
      check_keys(bl[i], p, {"name", "params", "region", "search", "fd_box"});
      const std::string name = string_of(require(bl[i], p, "name"), join(p, "name"));
      try {
        barrier_kind(name);
      } catch (const BarrierError& e) {
        fail(join(p, "name"), e.what());
      }
      if (bl[i].contains("params")) as_params(bl[i].at("params"), join(p, "params"));
      if (bl[i].contains("region"))
        check_keys(bl[i].at("region"), join(p, "region"), {"name", "max_xn", "sublevel", "annulus"});
      if (bl[i].contains("search")) {
        const Json& sj = bl[i].at("search");
        check_keys(sj, join(p, "search"), {"param", "larger_is_safer", "lo", "hi"});
        string_of(require(sj, join(p, "search"), "param"), join(join(p, "search"), "param"));
        if (!(as_number(require(sj, join(p, "search"), "lo"), join(join(p, "search"), "lo")) <
              as_number(require(sj, join(p, "search"), "hi"), join(join(p, "search"), "hi"))))
          fail(join(p, "search"), "need lo < hi");
      }
    }
  }

  // normalized echo
  s.config["delta"] = s.delta;
  s.config["stencil_width"] = s.stencil_width;
  s.config["h_ladder"] = s.h_ladder;
  s.config["r_ladder"] = s.r_ladder;
  s.config["x0"] = {s.x0.x(), s.x0.y()};
  s.config["seed"] = s.seed;
  s.config["verifiers"] = s.verifiers;
  return s;
}

Scenario parse_scenario(const std::string& text, const std::string& origin)
{
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::ostringstream os;
    os << origin << ":" << line << ":" << col << ": syntax error: " << e.what();
    throw ConfigError(os.str());
  }
  try {
    return scenario_from_json(j);
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
}

Scenario load_scenario(const std::string& path)
{
  std::ifstream is(path);
  if (!is) throw ConfigError(path + ": cannot open config file");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_scenario(ss.str(), path);
}

std::shared_ptr<const ProblemSpec> build_problem(const Scenario& s)
{
  const Json& j = s.config;
  const Json& dj = j.at("domain");
  const std::string kind = dj.at("kind").get<std::string>();
  DomainDescription d;
  if (kind == "half-disk" || kind == "disk") {
    d.kind = kind == "disk" ? DomainDescription::Kind::Disk : DomainDescription::Kind::HalfDisk;
    d.radius = number_or(dj, "domain", "radius", 1.0);
  } else if (kind == "polygon") {
    d.kind = DomainDescription::Kind::Polygon;
    const Json& vj = require(dj, "domain", "vertices");
    if (!vj.is_array()) fail("domain.vertices", "expected an array of points");
    for (std::size_t i = 0; i < vj.size(); ++i) d.vertices.push_back(as_vec2(vj[i], join("domain.vertices", i)));
    if (dj.contains("anchor")) d.anchor = as_vec2(dj.at("anchor"), "domain.anchor");
  } else {
    d.kind = DomainDescription::Kind::Sublevel;
    const Vec2 ax = as_vec2(require(dj, "domain", "semi_axes"), "domain.semi_axes");
    if (!(ax.minCoeff() > 0)) fail("domain.semi_axes", "semi-axes must be positive");
    d.g = [ax](const Vec2& x) { return (x.array() / ax.array()).square().sum(); };
  }

  auto make = [&](std::size_t samples) {
    d.samples = samples;
    try {
      return make_domain(d);
    } catch (const DomainError& e) {
      fail("domain", e.what());
    }
  };
  ConvexDomain dom;
  if (dj.contains("samples") && dj.at("samples").is_number()) {
    dom = make(std::size_t(dj.at("samples").get<double>()));
  } else {
    dom = make(512);
    const std::size_t want = std::size_t(std::ceil(4.0 * dom.perimeter() / s.delta));
    if (want > 512) dom = make(want);
  }

  const ScalarField phi = parse_expression(j.at("boundary_data"), "boundary_data");
  const ScalarField f = parse_expression(j.at("rhs"), "rhs");

  double lam, Lam;
  const Json bj = j.contains("bounds") ? j.at("bounds") : Json::object();
  if (bj.contains("lambda") && bj.contains("Lambda")) {
    lam = as_number(bj.at("lambda"), "bounds.lambda");
    Lam = as_number(bj.at("Lambda"), "bounds.Lambda");
  } else {
    Vec2 lo, hi;
    dom.bounding_box(lo, hi);
    lam = std::numeric_limits<double>::infinity();
    Lam = -lam;
    for (int a = 0; a <= 200; ++a)
      for (int b = 0; b <= 200; ++b) {
        const Vec2 x = lo + Vec2(a / 200.0 * (hi.x() - lo.x()), b / 200.0 * (hi.y() - lo.y()));
        if (!dom.contains(x)) continue;
        const double v = f(x);
        lam = std::min(lam, v);
        Lam = std::max(Lam, v);
      }
    lam = number_or(bj, "bounds", "lambda", lam);
    Lam = number_or(bj, "bounds", "Lambda", Lam);
  }
  const Json hj = j.contains("holder") ? j.at("holder") : Json::object();
  const double alpha = number_or(hj, "holder", "alpha", 0.5);
  const double M = number_or(hj, "holder", "M", 0.0);

  try {
    auto spec = std::make_shared<ProblemSpec>(make_problem(std::move(dom), phi, f, lam, Lam, alpha, M));
    spec->x0 = s.x0;
    spec->validate();
    return spec;
  } catch (const DomainError& e) {
    throw ConfigError(std::string("problem: ") + e.what());
  }
}

// ---------------------------------------------------------------- run

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Check make_check(std::string name, double value, const std::string& relation, double bound, bool ok,
                 std::string note = {}, double bound_hi = 0.0)
{
  Check c;
  c.name = std::move(name);
  c.value = value;
  c.relation = relation;
  c.bound = bound;
  c.bound_hi = bound_hi;
  c.status = ok ? "pass" : "fail";
  c.note = std::move(note);
  return c;
}

Check skipped(std::string name, std::string note)
{
  Check c;
  c.name = std::move(name);
  c.value = kNaN;
  c.bound = kNaN;
  c.bound_hi = kNaN;
  c.relation = "-";
  c.status = "skipped";
  c.note = std::move(note);
  return c;
}

std::string point_label(const Vec2& x)
{
  std::ostringstream os;
  os << "(" << x.x() << "," << x.y() << ")";
  return os.str();
}

CertRegion parse_region(const Json& j, const std::string& path, const ProblemSpec& spec, const AffineFunction& l)
{
  CertRegion r;
  if (j.is_null()) return r;
  r.name = j.contains("name") ? string_of(j.at("name"), join(path, "name")) : "region";
  if (j.contains("max_xn")) {
    const Json& m = j.at("max_xn");
    if (m.is_string() && m == "rho")
      r.max_xn = spec.domain.rho;
    else
      r.max_xn = as_number(m, join(path, "max_xn"));
  }
  if (j.contains("sublevel")) {
    r.sublevel = as_number(j.at("sublevel"), join(path, "sublevel"));
    r.l = l;
  }
  if (j.contains("annulus")) {
    const Json& a = j.at("annulus");
    check_keys(a, join(path, "annulus"), {"center", "in", "out"});
    r.annulus_center = as_vec2(require(a, join(path, "annulus"), "center"), join(path, "annulus.center"));
    r.annulus_in = as_number(require(a, join(path, "annulus"), "in"), join(path, "annulus.in"));
    r.annulus_out = as_number(require(a, join(path, "annulus"), "out"), join(path, "annulus.out"));
  }
  return r;
}

BProfile restrict_profile(const BProfile& p, double hmin, double hmax)
{
  BProfile q;
  for (const auto& e : p.entries)
    if (e.h >= hmin * (1 - 1e-12) && e.h <= hmax * (1 + 1e-12)) q.entries.push_back(e);
  return q;
}

}  // namespace

int Report::exit_code() const
{
  if (status == "hypothesis-failed") return 2;
  for (const auto& c : checks)
    if (c.status == "fail") return 1;
  return 0;
}

Report run_scenario(const Scenario& s)
{
  Report r;
  r.name = s.name;
  r.scenario = s.config;
  const Json& j = s.config;
  const Json expect = j.contains("expect") ? j.at("expect") : Json::object();
  const auto t_all = Clock::now();

  auto spec = build_problem(s);

  if (j.contains("hypothesis_case")) {
    r.has_hypothesis = true;
    r.hypothesis = check_hypothesis_case(*spec, int(j.at("hypothesis_case").get<double>()));
    r.checks.push_back(make_check("hypothesis-case-" + std::to_string(r.hypothesis.hypothesis_case),
                                  r.hypothesis.modulus, "satisfied", 0.0, r.hypothesis.satisfied,
                                  r.hypothesis.diagnostics));
    if (!r.hypothesis.satisfied) {
      r.status = "hypothesis-failed";
      for (const auto& v : s.verifiers) r.checks.push_back(skipped(v, "hypothesis not satisfied"));
      return r;
    }
  }

  // solve
  auto t0 = Clock::now();
  std::shared_ptr<const Grid> grid;
  Field u;
  try {
    grid = discretize(spec, s.delta, s.stencil_width);
  } catch (const SolverError& e) {
    throw ConfigError(std::string("delta: ") + e.what());
  }
  SolveOptions opt;
  if (j.contains("solver")) {
    const Json& sj = j.at("solver");
    if (sj.contains("method")) {
      const std::string m = string_of(sj.at("method"), "solver.method");
      if (m == "newton")
        opt.method = SolveMethod::Newton;
      else if (m == "gauss-seidel")
        opt.method = SolveMethod::GaussSeidel;
      else
        fail("solver.method", "expected newton or gauss-seidel");
    }
    opt.tol = number_or(sj, "solver", "tol", opt.tol);
    opt.max_iterations = int(number_or(sj, "solver", "max_iterations", opt.max_iterations));
  }
  r.solve.delta = s.delta;
  r.solve.unknowns = int(grid->unknowns());
  try {
    u = solve_dirichlet(grid, spec->f, opt);
  } catch (const SolverError& e) {
    r.timings["solve"] = seconds_since(t0);
    r.status = "failed";
    r.checks.push_back(make_check("solver-converged", kNaN, "converged", 0.0, false, e.what()));
    for (const auto& v : s.verifiers) r.checks.push_back(skipped(v, "no converged solution"));
    return r;
  }
  r.timings["solve"] = seconds_since(t0);
  r.field = std::make_shared<const Field>(u);
  r.solve.converged = u.converged;
  r.solve.method = u.method;
  r.solve.iterations = u.iterations;
  r.solve.residual = u.residual;
  r.solve.tolerance = opt.tol > 0 ? opt.tol : 1e-9 * std::max(1.0, u.f_max);
  r.solve.convexity_margin = u.convexity_margin;
  r.checks.push_back(make_check("solver-converged", u.residual, "<=", r.solve.tolerance,
                                u.converged && u.residual <= r.solve.tolerance, u.method));
  const double convex_tol = 1e-8 * std::max(1.0, u.scale());
  r.checks.push_back(make_check("discrete-convexity", u.convexity_margin, ">=", -convex_tol, u.convexity_certified()));

  if (s.runs("oracle")) {
    const ScalarField ex = parse_expression(j.at("exact"), "exact");
    double err = 0.0;
    for (std::size_t i = 0; i < grid->unknowns(); ++i) err = std::max(err, std::abs(u.u[i] - ex(grid->nodes[i])));
    r.solve.oracle_error = err;
    const double tol = number_or(expect, "expect", "oracle_error", 5e-3);
    r.checks.push_back(make_check("oracle-error", err, "<=", tol, err <= tol));
  }

  // tangent plane and separation
  t0 = Clock::now();
  try {
    r.tangent = tangent_plane(u, s.x0);
  } catch (const std::exception& e) {
    r.status = "failed";
    r.checks.push_back(make_check("supporting-plane", kNaN, ">=", 0.0, false, e.what()));
    return r;
  }
  const double support_tol = -1e-6 * std::max(1.0, u.scale());
  r.checks.push_back(make_check("supporting-plane", r.tangent.support_min, ">=", support_tol,
                                r.tangent.support_min >= support_tol,
                                r.tangent.snapped ? "normal slope snapped to the supporting value" : ""));
  bool separated = true;
  if (s.runs("separation")) {
    r.separation = quadratic_separation(*spec, r.tangent.l);
    separated = r.separation.success;
    const bool want = bool_or(expect, "expect", "separation", true);
    r.checks.push_back(make_check(want ? "quadratic-separation" : "separation-failure-expected", r.separation.mu_lo,
                                  ">", 0.0, separated == want, r.separation.message));
  }
  r.timings["tangent"] = seconds_since(t0);

  // sections
  t0 = Clock::now();
  const int floor = int(number_or(j, "", "resolution_floor", 50));
  if (s.runs("sections") || s.runs("doubling")) {
    if (!separated) {
      if (s.runs("sections")) r.checks.push_back(skipped("sections", "no quadratic separation"));
      if (s.runs("doubling")) r.checks.push_back(skipped("doubling", "no quadratic separation"));
    } else {
      r.profile = b_profile(u, s.x0, s.h_ladder, r.tangent.l, floor);
      r.volume = volume_scaling_scan(restrict_profile(r.profile, std::ldexp(1.0, -10), 0.25));
      r.ratio = b_ratio_bounds(r.profile);
      if (s.runs("sections")) {
        const double vtol = number_or(expect, "expect", "volume_slope_tol", 0.05);
        r.checks.push_back(make_check("volume-slope", r.volume.slope, "in", 1.0 - vtol,
                                      std::abs(r.volume.slope - 1.0) <= vtol && r.volume.h.size() >= 3,
                                      std::to_string(r.volume.h.size()) + " levels in [2^-10, 2^-2]", 1.0 + vtol));
        if (expect.contains("area_ratio")) {
          const double target = as_number(expect.at("area_ratio"), "expect.area_ratio");
          const double tol = number_or(expect, "expect", "area_ratio_tol", 0.02);
          const double lo = target * (1 - tol), hi = target * (1 + tol);
          r.checks.push_back(make_check("area-ratio-min", r.volume.ratio_min, "in", lo,
                                        r.volume.ratio_min >= lo && r.volume.ratio_min <= hi, "", hi));
          r.checks.push_back(make_check("area-ratio-max", r.volume.ratio_max, "in", lo,
                                        r.volume.ratio_max >= lo && r.volume.ratio_max <= hi, "", hi));
        }
        const double btol = number_or(expect, "expect", "b_ratio_tol", 0.02);
        r.checks.push_back(make_check("b-ratio-bounds", std::max(r.ratio.worst_low, r.ratio.worst_high), "<=", btol,
                                      r.ratio.pass(btol)));
        const double kin = r.profile.min_k_in();
        r.checks.push_back(make_check("localization-k-in", kin, ">", 0.0, kin > 0.0,
                                      "max |nu|/|log h| = " + std::to_string(r.profile.max_nu_over_log_h())));
      }
      if (s.runs("doubling")) {
        const double c0 = number_or(j, "", "doubling_c0", 0.5);
        r.doubling = doubling_scan(r.profile, c0);
      }
    }
  }
  r.timings["sections"] = seconds_since(t0);

  // regularity
  t0 = Clock::now();
  if (s.runs("regularity")) {
    std::vector<std::string> cons = {"free"};
    if (j.contains("regularity") && j.at("regularity").contains("constraints")) {
      const Json& cj = j.at("regularity").at("constraints");
      if (!cj.is_array() || cj.empty()) fail("regularity.constraints", "expected a non-empty array");
      cons.clear();
      for (std::size_t i = 0; i < cj.size(); ++i) {
        const std::string c = string_of(cj[i], join("regularity.constraints", i));
        if (c != "free" && c != "boundary-matched")
          fail(join("regularity.constraints", i), "expected free or boundary-matched");
        cons.push_back(c);
      }
    }
    try {
      for (const auto& c : cons)
        r.regularity.push_back(c2alpha_exponent(u, s.x0, s.r_ladder,
                                                c == "free" ? FitConstraint::Free : FitConstraint::BoundaryMatched));
      const RegularityReport& rr = r.regularity.front();
      const std::string note = rr.constraint + (rr.low_confidence ? ", low confidence" : "");
      if (expect.contains("alpha")) {
        const std::vector<double> a = as_numbers(expect.at("alpha"), "expect.alpha");
        if (a.size() != 2) fail("expect.alpha", "expected [lo, hi]");
        r.checks.push_back(make_check("holder-exponent", rr.alpha_est, "in", a[0],
                                      rr.alpha_est >= a[0] && rr.alpha_est <= a[1], note, a[1]));
      }
      if (expect.contains("min_slope")) {
        const double m = as_number(expect.at("min_slope"), "expect.min_slope");
        r.checks.push_back(make_check("fit-slope", rr.slope, ">=", m, rr.slope >= m, note));
      }
    } catch (const RegularityError& e) {
      r.checks.push_back(make_check("regularity", kNaN, "-", 0.0, false, e.what()));
    }
  }
  r.timings["regularity"] = seconds_since(t0);

  // Pogorelov
  t0 = Clock::now();
  if (s.runs("pogorelov")) {
    const Json& pj = j.at("pogorelov");
    const double k = as_number(require(pj, "pogorelov", "k"), "pogorelov.k");
    r.has_pogorelov = true;
    r.pogorelov = pogorelov_region_bounds(u, k, number_or(pj, "pogorelov", "c0", -1.0));
    r.checks.push_back(make_check("pogorelov-applicable", r.pogorelov.region_nodes, "applicable", 0.0,
                                  r.pogorelov.applicable, r.pogorelov.message));
    if (r.pogorelov.applicable && expect.contains("pogorelov_identity_tol")) {
      const double tol = as_number(expect.at("pogorelov_identity_tol"), "expect.pogorelov_identity_tol");
      const double dev = std::max(std::abs(r.pogorelov.eig_min - 1.0), std::abs(r.pogorelov.eig_max - 1.0));
      r.checks.push_back(make_check("pogorelov-identity", dev, "<=", tol, dev <= tol));
    }
    if (r.pogorelov.applicable && expect.contains("pogorelov_eig")) {
      const std::vector<double> e = as_numbers(expect.at("pogorelov_eig"), "expect.pogorelov_eig");
      if (e.size() != 2) fail("expect.pogorelov_eig", "expected [lo, hi]");
      r.checks.push_back(make_check("pogorelov-eigen-min", r.pogorelov.eig_min, ">=", e[0], r.pogorelov.eig_min >= e[0]));
      r.checks.push_back(make_check("pogorelov-eigen-max", r.pogorelov.eig_max, "<=", e[1], r.pogorelov.eig_max <= e[1]));
    }
  }
  r.timings["pogorelov"] = seconds_since(t0);

  // barriers
  t0 = Clock::now();
  if (s.runs("barriers")) {
    const Json& bl = j.at("barriers");
    Vec2 blo, bhi;
    spec->domain.bounding_box(blo, bhi);
    for (std::size_t i = 0; i < bl.size(); ++i) {
      const std::string p = join("barriers", i);
      const Json& bj = bl[i];
      const std::string name = bj.at("name").get<std::string>();
      const auto params = bj.contains("params") ? as_params(bj.at("params"), join(p, "params"))
                                                : std::map<std::string, double>{};
      const CertRegion region = parse_region(bj.contains("region") ? bj.at("region") : Json(), join(p, "region"),
                                             *spec, r.tangent.l);
      const std::string label = name + "@" + region.name;
      try {
        Barrier b;
        Certificate cert;
        if (bj.contains("search")) {
          const Json& sj = bj.at("search");
          const ConstantSearch cs = search_constant(name, params, sj.at("param").get<std::string>(),
                                                    bool_or(sj, join(p, "search"), "larger_is_safer", true),
                                                    sj.at("lo").get<double>(), sj.at("hi").get<double>(), u, region);
          b = cs.barrier;
          cert = cs.certificate;
          cert.message += "; searched " + cs.param + " threshold " + std::to_string(cs.threshold);
        } else {
          b = barrier_catalog(name, params);
          cert = certify_lower_bound(b, u, region);
        }
        r.certificates.push_back(cert);
        r.checks.push_back(make_check("barrier:" + label, cert.boundary_margin, "certified", 0.0,
                                      cert.certified() && cert.boundary_margin > 0 &&
                                          cert.interior_violation <= 10.0 * r.solve.tolerance,
                                      cert.verdict + ": " + cert.message));
        Vec2 lo = blo, hi = bhi;
        if (bj.contains("fd_box")) {
          const Json& fb = bj.at("fd_box");
          if (!fb.is_array() || fb.size() != 2) fail(join(p, "fd_box"), "expected [[xlo, ylo], [xhi, yhi]]");
          lo = as_vec2(fb[0], join(p, "fd_box[0]"));
          hi = as_vec2(fb[1], join(p, "fd_box[1]"));
        }
        const FdCheck fd = fd_determinant_check(b, lo, hi, 100, s.seed);
        r.checks.push_back(make_check("barrier-det:" + label, fd.max_rel_error, "<=", 1e-6, fd.pass(1e-6),
                                      std::to_string(fd.samples) + " samples"));
      } catch (const BarrierError& e) {
        r.checks.push_back(make_check("barrier:" + label, kNaN, "certified", 0.0, false, e.what()));
      }
    }
  }
  r.timings["barriers"] = seconds_since(t0);

  t0 = Clock::now();
  if (s.runs("slope-bounds")) {
    const Json& sj = j.at("slope_bounds");
    const double k = number_or(sj, "slope_bounds", "k", 0.5);
    std::vector<Vec2> pts = {s.x0};
    if (sj.contains("points")) {
      pts.clear();
      const Json& pl = sj.at("points");
      if (!pl.is_array()) fail("slope_bounds.points", "expected an array of points");
      for (std::size_t i = 0; i < pl.size(); ++i) pts.push_back(as_vec2(pl[i], join("slope_bounds.points", i)));
    }
    for (const auto& x : pts) {
      try {
        const SlopeInterval si = slope_bound_from_barrier(u, x, k);
        r.slopes.push_back(si);
        r.certificates.push_back(si.certificate);
        r.checks.push_back(make_check("slope-interval" + point_label(x), si.gamma, "in", si.lo,
                                      si.contains(si.gamma) && si.certificate.certified(), si.certificate.verdict,
                                      si.hi));
      } catch (const std::exception& e) {
        r.checks.push_back(make_check("slope-interval" + point_label(x), kNaN, "in", kNaN, false, e.what(), kNaN));
      }
    }
  }
  r.timings["slope-bounds"] = seconds_since(t0);

  // randomized comparison pairs on a coarse grid
  t0 = Clock::now();
  if (s.runs("comparison")) {
    const Json cj = j.contains("comparison") ? j.at("comparison") : Json::object();
    const int pairs = int(number_or(cj, "comparison", "pairs", 20));
    const double cd = number_or(cj, "comparison", "delta", 1.0 / 32.0);
    const double tol = number_or(expect, "expect", "comparison_tol", 1e-8);
    const ScalarField phi = parse_expression(j.at("boundary_data"), "boundary_data");
    std::mt19937_64 rng(s.seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double worst = 0.0;
    int violations = 0;
    std::string note;
    const Field vv = solve_dirichlet(discretize(spec, cd, s.stencil_width), spec->f);
    for (int q = 0; q < pairs; ++q) {
      const double a = U(rng), a2 = U(rng), b = 0.1 * U(rng), b2 = 0.1 * U(rng);
      const ScalarField f = spec->f;
      const ScalarField fu = [f, a, a2](const Vec2& x) { return f(x) * (1.0 + a + a2 * x.x() * x.x()); };
      const ScalarField pu = [phi, b, b2](const Vec2& x) { return phi(x) - b - b2 * x.y() * x.y(); };
      auto su = std::make_shared<ProblemSpec>(
          make_problem(spec->domain, pu, fu, spec->lambda, spec->Lambda * (2.0 + a2 * 4.0), spec->alpha, spec->M));
      Field uu = solve_dirichlet(discretize(su, cd, s.stencil_width), fu);
      const Verdict v = comparison_check(uu, vv, 1e-7);
      if (v.status == Verdict::Status::Inapplicable) {
        ++violations;
        note = v.message;
        continue;
      }
      worst = std::max(worst, v.value);
      if (v.value > tol) ++violations;
    }
    r.checks.push_back(make_check("comparison-pairs", worst, "<=", tol, violations == 0,
                                  std::to_string(pairs) + " pairs, " + std::to_string(violations) + " violations" +
                                      (note.empty() ? "" : "; " + note)));
  }
  r.timings["comparison"] = seconds_since(t0);
  r.timings["total"] = seconds_since(t_all);

  if (r.exit_code() != 0) r.status = "failed";
  return r;
}

Report run_scenario_file(const std::string& path) { return run_scenario(load_scenario(path)); }

// ---------------------------------------------------------------- serialization

namespace {

Json cert_json(const Certificate& c)
{
  Json j;
  j["name"] = c.name;
  j["side"] = c.side;
  j["region"] = c.region;
  j["params"] = params_json(c.params);
  j["verdict"] = c.verdict;
  j["message"] = c.message;
  j["boundary_margin"] = num(c.boundary_margin);
  j["anchor_gap"] = num(c.anchor_gap);
  j["det_margin"] = num(c.det_margin);
  j["discrete_margin"] = num(c.discrete_margin);
  j["interior_violation"] = num(c.interior_violation);
  j["tolerance"] = num(c.tolerance);
  j["region_nodes"] = c.region_nodes;
  j["boundary_nodes"] = c.boundary_nodes;
  j["worst_boundary"] = vec(c.worst_boundary);
  return j;
}

Certificate cert_from(const Json& j)
{
  Certificate c;
  c.name = j.at("name");
  c.side = j.at("side");
  c.region = j.at("region");
  c.params = get_params(j.at("params"));
  c.verdict = j.at("verdict");
  c.message = j.at("message");
  c.boundary_margin = get_num(j.at("boundary_margin"));
  c.anchor_gap = get_num(j.at("anchor_gap"));
  c.det_margin = get_num(j.at("det_margin"));
  c.discrete_margin = get_num(j.at("discrete_margin"));
  c.interior_violation = get_num(j.at("interior_violation"));
  c.tolerance = get_num(j.at("tolerance"));
  c.region_nodes = j.at("region_nodes");
  c.boundary_nodes = j.at("boundary_nodes");
  c.worst_boundary = get_vec(j.at("worst_boundary"));
  return c;
}

Json regularity_json(const RegularityReport& r)
{
  Json j;
  j["x0"] = vec(r.x0);
  j["constraint"] = r.constraint;
  j["slope"] = num(r.slope);
  j["alpha_est"] = num(r.alpha_est);
  j["C_est"] = num(r.C_est);
  j["low_confidence"] = r.low_confidence;
  j["notes"] = r.notes;
  Json sc = Json::array();
  for (const auto& s : r.scales)
    sc.push_back({{"r", num(s.r)}, {"R", num(s.R)}, {"gamma", num(s.gamma)}, {"H", mat(s.H)}, {"nodes", s.nodes}});
  j["scales"] = sc;
  j["gamma_drift"] = nums(r.gamma_drift);
  j["hessian_drift"] = nums(r.hessian_drift);
  return j;
}

RegularityReport regularity_from(const Json& j)
{
  RegularityReport r;
  r.x0 = get_vec(j.at("x0"));
  r.constraint = j.at("constraint");
  r.slope = get_num(j.at("slope"));
  r.alpha_est = get_num(j.at("alpha_est"));
  r.C_est = get_num(j.at("C_est"));
  r.low_confidence = j.at("low_confidence");
  r.notes = j.at("notes");
  for (const auto& s : j.at("scales"))
    r.scales.push_back({get_num(s.at("r")), get_num(s.at("R")), get_num(s.at("gamma")), get_mat(s.at("H")),
                        s.at("nodes").get<int>()});
  r.gamma_drift = get_nums(j.at("gamma_drift"));
  r.hessian_drift = get_nums(j.at("hessian_drift"));
  return r;
}

}  // namespace

Json Report::to_json() const
{
  Json j;
  j["name"] = name;
  j["status"] = status;
  j["exit_code"] = exit_code();
  j["scenario"] = scenario;

  j["solve"] = {{"converged", solve.converged},
                {"method", solve.method},
                {"iterations", solve.iterations},
                {"residual", num(solve.residual)},
                {"tolerance", num(solve.tolerance)},
                {"convexity_margin", num(solve.convexity_margin)},
                {"unknowns", solve.unknowns},
                {"delta", num(solve.delta)},
                {"oracle_error", num(solve.oracle_error)}};

  if (has_hypothesis)
    j["hypothesis"] = {{"case", hypothesis.hypothesis_case},
                       {"satisfied", hypothesis.satisfied},
                       {"modulus", num(hypothesis.modulus)},
                       {"diagnostics", hypothesis.diagnostics}};
  else
    j["hypothesis"] = nullptr;

  j["tangent_plane"] = {{"c", num(tangent.l.c)},
                        {"p", vec(tangent.l.p)},
                        {"tangent", vec(tangent.tangent)},
                        {"normal", vec(tangent.normal)},
                        {"u0", num(tangent.u0)},
                        {"tangential_slope", num(tangent.tangential_slope)},
                        {"gamma", num(tangent.gamma)},
                        {"gamma_richardson", num(tangent.gamma_richardson)},
                        {"gamma_error", num(tangent.gamma_error)},
                        {"gamma_support", num(tangent.gamma_support)},
                        {"support_min", num(tangent.support_min)},
                        {"snapped", tangent.snapped}};

  j["separation"] = {{"mu_lo", num(separation.mu_lo)},
                     {"mu_hi", num(separation.mu_hi)},
                     {"decay_exponent", num(separation.decay_exponent)},
                     {"samples", separation.samples},
                     {"argmin", vec(separation.argmin)},
                     {"success", separation.success},
                     {"message", separation.message}};

  Json prof = Json::array();
  for (const auto& e : profile.entries)
    prof.push_back({{"h", num(e.h)},
                    {"area", num(e.area)},
                    {"b", num(e.b)},
                    {"nu", vec(e.nu)},
                    {"k_in", num(e.k_in)},
                    {"k_out", num(e.k_out)},
                    {"semi_axes", vec(e.semi_axes)},
                    {"lattice_nodes", e.lattice_nodes}});
  j["sections"] = {
      {"profile", prof},
      {"skipped_levels", nums(profile.skipped)},
      {"volume", {{"h", nums(volume.h)}, {"area", nums(volume.area)}, {"slope", num(volume.slope)},
                  {"ratio_min", num(volume.ratio_min)}, {"ratio_max", num(volume.ratio_max)}}},
      {"b_ratio", {{"worst_low", num(ratio.worst_low)}, {"worst_high", num(ratio.worst_high)}}},
      {"doubling", {{"c0", num(doubling.c0)}, {"vacuous", doubling.vacuous}, {"h", nums(doubling.h)},
                    {"max_ratio", nums(doubling.max_ratio)},
                    {"doubled", std::vector<int>(doubling.doubled.begin(), doubling.doubled.end())},
                    {"aggregate", num(doubling.aggregate)}, {"envelope_low", num(doubling.envelope_low)},
                    {"envelope_high", num(doubling.envelope_high)}}}};

  Json reg = Json::array();
  for (const auto& rr : regularity) reg.push_back(regularity_json(rr));
  j["regularity"] = reg;

  if (has_pogorelov)
    j["pogorelov"] = {{"applicable", pogorelov.applicable},
                      {"message", pogorelov.message},
                      {"k", num(pogorelov.k)},
                      {"region_nodes", pogorelov.region_nodes},
                      {"eig_min", num(pogorelov.eig_min)},
                      {"eig_max", num(pogorelov.eig_max)},
                      {"functional_max", num(pogorelov.functional_max)},
                      {"functional_argmax", vec(pogorelov.functional_argmax)},
                      {"functional_interior", pogorelov.functional_interior},
                      {"functional_closed_form", num(pogorelov.functional_closed_form)},
                      {"c0", num(pogorelov.c0)},
                      {"third_nodes", pogorelov.third_nodes},
                      {"third_max", num(pogorelov.third_max)}};
  else
    j["pogorelov"] = nullptr;

  Json certs = Json::array();
  for (const auto& c : certificates) certs.push_back(cert_json(c));
  j["certificates"] = certs;

  Json sl = Json::array();
  for (const auto& si : slopes)
    sl.push_back({{"lo", num(si.lo)},
                  {"hi", num(si.hi)},
                  {"gamma", num(si.gamma)},
                  {"delta", num(si.delta)},
                  {"k", num(si.k)},
                  {"certificate", cert_json(si.certificate)}});
  j["slope_intervals"] = sl;

  Json ch = Json::array();
  for (const auto& c : checks)
    ch.push_back({{"name", c.name},
                  {"status", c.status},
                  {"value", num(c.value)},
                  {"relation", c.relation},
                  {"bound", num(c.bound)},
                  {"bound_hi", num(c.bound_hi)},
                  {"note", c.note}});
  j["checks"] = ch;
  return j;
}

Report Report::from_json(const Json& j)
{
  Report r;
  r.name = j.at("name");
  r.status = j.at("status");
  r.scenario = j.at("scenario");

  const Json& s = j.at("solve");
  r.solve.converged = s.at("converged");
  r.solve.method = s.at("method");
  r.solve.iterations = s.at("iterations");
  r.solve.residual = get_num(s.at("residual"));
  r.solve.tolerance = get_num(s.at("tolerance"));
  r.solve.convexity_margin = get_num(s.at("convexity_margin"));
  r.solve.unknowns = s.at("unknowns");
  r.solve.delta = get_num(s.at("delta"));
  r.solve.oracle_error = get_num(s.at("oracle_error"));

  if (!j.at("hypothesis").is_null()) {
    const Json& h = j.at("hypothesis");
    r.has_hypothesis = true;
    r.hypothesis.hypothesis_case = h.at("case");
    r.hypothesis.satisfied = h.at("satisfied");
    r.hypothesis.modulus = get_num(h.at("modulus"));
    r.hypothesis.diagnostics = h.at("diagnostics");
  }

  const Json& t = j.at("tangent_plane");
  r.tangent.l.c = get_num(t.at("c"));
  r.tangent.l.p = get_vec(t.at("p"));
  r.tangent.tangent = get_vec(t.at("tangent"));
  r.tangent.normal = get_vec(t.at("normal"));
  r.tangent.u0 = get_num(t.at("u0"));
  r.tangent.tangential_slope = get_num(t.at("tangential_slope"));
  r.tangent.gamma = get_num(t.at("gamma"));
  r.tangent.gamma_richardson = get_num(t.at("gamma_richardson"));
  r.tangent.gamma_error = get_num(t.at("gamma_error"));
  r.tangent.gamma_support = get_num(t.at("gamma_support"));
  r.tangent.support_min = get_num(t.at("support_min"));
  r.tangent.snapped = t.at("snapped");

  const Json& sp = j.at("separation");
  r.separation.mu_lo = get_num(sp.at("mu_lo"));
  r.separation.mu_hi = get_num(sp.at("mu_hi"));
  r.separation.decay_exponent = get_num(sp.at("decay_exponent"));
  r.separation.samples = sp.at("samples");
  r.separation.argmin = get_vec(sp.at("argmin"));
  r.separation.success = sp.at("success");
  r.separation.message = sp.at("message");

  const Json& sc = j.at("sections");
  for (const auto& e : sc.at("profile")) {
    BProfileEntry b;
    b.h = get_num(e.at("h"));
    b.area = get_num(e.at("area"));
    b.b = get_num(e.at("b"));
    b.nu = get_vec(e.at("nu"));
    b.k_in = get_num(e.at("k_in"));
    b.k_out = get_num(e.at("k_out"));
    b.semi_axes = get_vec(e.at("semi_axes"));
    b.lattice_nodes = e.at("lattice_nodes");
    r.profile.entries.push_back(b);
  }
  r.profile.skipped = get_nums(sc.at("skipped_levels"));
  const Json& v = sc.at("volume");
  r.volume.h = get_nums(v.at("h"));
  r.volume.area = get_nums(v.at("area"));
  r.volume.slope = get_num(v.at("slope"));
  r.volume.ratio_min = get_num(v.at("ratio_min"));
  r.volume.ratio_max = get_num(v.at("ratio_max"));
  r.ratio.worst_low = get_num(sc.at("b_ratio").at("worst_low"));
  r.ratio.worst_high = get_num(sc.at("b_ratio").at("worst_high"));
  const Json& d = sc.at("doubling");
  r.doubling.c0 = get_num(d.at("c0"));
  r.doubling.vacuous = d.at("vacuous");
  r.doubling.h = get_nums(d.at("h"));
  r.doubling.max_ratio = get_nums(d.at("max_ratio"));
  for (const auto& x : d.at("doubled")) r.doubling.doubled.push_back(char(x.get<int>()));
  r.doubling.aggregate = get_num(d.at("aggregate"));
  r.doubling.envelope_low = get_num(d.at("envelope_low"));
  r.doubling.envelope_high = get_num(d.at("envelope_high"));

  for (const auto& rr : j.at("regularity")) r.regularity.push_back(regularity_from(rr));

  if (!j.at("pogorelov").is_null()) {
    const Json& p = j.at("pogorelov");
    r.has_pogorelov = true;
    r.pogorelov.applicable = p.at("applicable");
    r.pogorelov.message = p.at("message");
    r.pogorelov.k = get_num(p.at("k"));
    r.pogorelov.region_nodes = p.at("region_nodes");
    r.pogorelov.eig_min = get_num(p.at("eig_min"));
    r.pogorelov.eig_max = get_num(p.at("eig_max"));
    r.pogorelov.functional_max = get_num(p.at("functional_max"));
    r.pogorelov.functional_argmax = get_vec(p.at("functional_argmax"));
    r.pogorelov.functional_interior = p.at("functional_interior");
    r.pogorelov.functional_closed_form = get_num(p.at("functional_closed_form"));
    r.pogorelov.c0 = get_num(p.at("c0"));
    r.pogorelov.third_nodes = p.at("third_nodes");
    r.pogorelov.third_max = get_num(p.at("third_max"));
  }

  for (const auto& c : j.at("certificates")) r.certificates.push_back(cert_from(c));
  for (const auto& si : j.at("slope_intervals")) {
    SlopeInterval x;
    x.lo = get_num(si.at("lo"));
    x.hi = get_num(si.at("hi"));
    x.gamma = get_num(si.at("gamma"));
    x.delta = get_num(si.at("delta"));
    x.k = get_num(si.at("k"));
    x.certificate = cert_from(si.at("certificate"));
    r.slopes.push_back(x);
  }
  for (const auto& c : j.at("checks")) {
    Check k;
    k.name = c.at("name");
    k.status = c.at("status");
    k.value = get_num(c.at("value"));
    k.relation = c.at("relation");
    k.bound = get_num(c.at("bound"));
    k.bound_hi = get_num(c.at("bound_hi"));
    k.note = c.at("note");
    r.checks.push_back(k);
  }
  return r;
}

// ---------------------------------------------------------------- emit

std::string plotdata(const Report& r)
{
  std::ostringstream os;
  os.precision(17);
  os << "# " << r.name << ": log h, log |S_h|\n";
  for (const auto& e : r.profile.entries) os << std::log(e.h) << " " << std::log(e.area) << "\n";
  os << "\n\n# " << r.name << ": log h, b\n";
  for (const auto& e : r.profile.entries) os << std::log(e.h) << " " << e.b << "\n";
  os << "\n\n# " << r.name << ": log r, log R";
  if (!r.regularity.empty()) os << " (" << r.regularity.front().constraint << " fit)";
  os << "\n";
  if (!r.regularity.empty())
    for (const auto& s : r.regularity.front().scales)
      if (s.R > 0) os << std::log(s.r) << " " << std::log(s.R) << "\n";
  return os.str();
}

std::vector<std::string> emit(const Report& r, const std::string& dir, const std::vector<std::string>& formats)
{
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());
  std::vector<std::string> written;
  auto put = [&](const std::string& file, const std::string& text) {
    const std::string path = (fs::path(dir) / file).string();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing: " + std::strerror(errno));
    os << text;
    os.close();
    if (!os) throw std::runtime_error("write failed for " + path + ": " + std::strerror(errno));
    written.push_back(path);
  };
  for (const auto& f : formats) {
    if (f == "json") {
      put(r.name + ".json", r.to_json().dump(2) + "\n");
      if (!r.regularity.empty()) {
        std::string text;
        for (const auto& rr : r.regularity) text += rr.to_text() + "\n";
        put(r.name + ".regularity.txt", text);
      }
    } else if (f == "csv") {
      put(r.name + ".csv", r.profile.to_csv());
    } else if (f == "plotdata") {
      put(r.name + ".plotdata", plotdata(r));
    } else if (f == "checkpoint") {
      if (!r.field) throw std::runtime_error("report " + r.name + " carries no solved field to checkpoint");
      const std::string path = (fs::path(dir) / (r.name + ".field")).string();
      write_checkpoint(*r.field, path);
      written.push_back(path);
    } else {
      throw ConfigError("unknown output format '" + f + "' (expected json, csv, plotdata or checkpoint)");
    }
  }
  return written;
}

}  // namespace mongelab
