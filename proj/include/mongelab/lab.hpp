#pragma once

#include "mongelab/barriers.hpp"

#include "json.hpp"

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace mongelab {

using Json = nlohmann::ordered_json;

// Malformed configs: the message names the line (syntax) or the key path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Closed-form scalar function from its config description.
ScalarField parse_expression(const Json& j, const std::string& path);

struct Scenario {
  std::string name;
  Json config;  // normalized echo, defaults filled in
  double delta = 1.0 / 128.0;
  int stencil_width = 2;
  std::vector<double> h_ladder, r_ladder;
  Vec2 x0 = Vec2::Zero();
  unsigned seed = 1;
  std::vector<std::string> verifiers;

  bool runs(const std::string& v) const;
};

Scenario parse_scenario(const std::string& text, const std::string& origin = "<config>");
Scenario scenario_from_json(const Json& j);
Scenario load_scenario(const std::string& path);

std::shared_ptr<const ProblemSpec> build_problem(const Scenario& s);

struct Check {
  std::string name;
  double value = 0.0;
  double bound = 0.0;      // tolerance or limit the value was checked against
  std::string relation;    // "<=", ">=", "in", "==", "certified"
  double bound_hi = 0.0;   // upper end for "in"
  std::string status = "skipped";  // pass | fail | skipped
  std::string note;
};

struct SolveRecord {
  bool converged = false;
  std::string method;
  int iterations = 0;
  double residual = 0.0;
  double tolerance = 0.0;
  double convexity_margin = 0.0;
  int unknowns = 0;
  double delta = 0.0;
  double oracle_error = std::numeric_limits<double>::quiet_NaN();
};

struct Report {
  std::string name;
  std::string status = "ok";  // ok | failed | hypothesis-failed
  Json scenario;
  SolveRecord solve;
  HypothesisVerdict hypothesis;
  bool has_hypothesis = false;
  TangentPlane tangent;
  SeparationResult separation;
  BProfile profile;
  VolumeScan volume;
  BRatioCheck ratio;
  DoublingReport doubling;
  std::vector<RegularityReport> regularity;
  bool has_pogorelov = false;
  PogorelovStats pogorelov;
  std::vector<Certificate> certificates;
  std::vector<SlopeInterval> slopes;
  std::vector<Check> checks;
  std::map<std::string, double> timings;  // wall clock, never serialized
  std::shared_ptr<const Field> field;      // solved field for checkpoints, never serialized

  int exit_code() const;
  Json to_json() const;
  static Report from_json(const Json& j);
};

Report run_scenario(const Scenario& s);
Report run_scenario_file(const std::string& path);

// Writes <dir>/<name>.<format> for json, csv and plotdata (plus
// <name>.regularity.txt with json) and <dir>/<name>.field for checkpoint;
// returns the paths written.
std::vector<std::string> emit(const Report& r, const std::string& dir, const std::vector<std::string>& formats);
std::string plotdata(const Report& r);

std::vector<std::string> preset_names();
Json preset_config(const std::string& name);

}  // namespace mongelab
