#pragma once

// JSON scenarios, command dispatch and CSV/JSON export.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hss/assembly.hpp"
#include "hss/cider.hpp"
#include "hss/grid.hpp"
#include "hss/stability.hpp"

namespace hss {

struct AnalysisSettings {
  std::optional<double> epsilon;  // absolute tolerances override the relative ones
  std::optional<double> delta;
  double relative_epsilon = 1e-6;
  double relative_delta = 1e-4;
  double margin = 0.0;  // unstable iff Re > margin
  std::optional<int> hmax_probe;
  std::vector<std::string> control_parameters;
  std::vector<std::string> hardware_parameters;
  std::vector<double> perturbations{-0.2, -0.1, 0.1, 0.2};
  std::vector<Complex> htf_points;
};

struct SweepDefinition {
  std::string name;
  std::string parameter;  // dotted path
  std::vector<double> values;
  bool refine = true;
};

struct CiderEntry {
  std::string node;
  CiderSpec spec;
};

struct Scenario {
  std::string source;  // file name, for diagnostics
  std::string name;
  nlohmann::json document;
  double f1 = 50.0;
  int hmax = 25;
  GridTopology grid;
  std::vector<CiderEntry> ciders;
  std::vector<SweepDefinition> sweeps;
  AnalysisSettings analysis;
};

Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& text, const std::string& source = "<scenario>");
/// Validates a parsed document; `source` only labels diagnostics.
Scenario scenario_from_json(const nlohmann::json& document, const std::string& source);

/// Dotted path ("ciders.0.control.gains.kp") to a JSON pointer. Array
/// segments may also be element names or ids.
nlohmann::json::json_pointer resolve_path(const nlohmann::json& document, const std::string& path);

struct BuiltSystem {
  HarmonicIndexSet set{0, 50.0};
  GridStateSpace grid;
  HssModel grid_hss;
  std::vector<CiderHss> ciders;
  OpenLoopSystem open;
  ClosedLoopSystem closed;
};

BuiltSystem build_system(const Scenario& scenario, std::optional<int> hmax = std::nullopt);

/// "system", "grid" or "cider:<name>".
HssModel select_target(const BuiltSystem& built, const std::string& target);

/// Rebuilds the scenario with numeric overrides at dotted paths.
class ScenarioFactory : public ModelFactory {
 public:
  ScenarioFactory(Scenario scenario, std::string target = "system");
  HssModel build(const ParameterOverrides& overrides, std::optional<int> hmax = std::nullopt) const override;
  double parameter_value(const std::string& path) const override;

 private:
  Scenario scenario_;
  std::string target_;
};

// --- commands and results

struct EigenRecord {
  Index index = 0;
  Complex value;
  std::string dominant_component;
  int dominant_harmonic = 0;
  std::string classification;
  bool spurious = false;
};

struct HtfRecord {
  Complex s;
  Index row = 0;
  Index col = 0;
  Complex value;
};

struct ResultSet {
  std::string command;
  std::string scenario;
  std::string target;
  int hmax = 0;
  double f1 = 0.0;
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<EigenRecord> eigenvalues;
  std::optional<EigenTrace> trace;
  std::vector<HtfRecord> htf;
  std::optional<bool> unstable;

  bool empty() const { return eigenvalues.empty() && !trace && htf.empty(); }
};

struct CommandOptions {
  std::optional<int> hmax;
  std::optional<int> hmax_probe;
  int jobs = 1;
  std::string target = "system";
  std::string sweep;  // name of a scenario sweep; default the first one
  std::vector<std::string> control;
  std::vector<std::string> hardware;
  std::vector<Complex> s_points;
  std::string htf_output;
  std::string htf_input;
};

ResultSet run_command(const std::string& command, const Scenario& scenario, const CommandOptions& options = {});

enum class ExportFormat { csv, json };

std::string format_results(const ResultSet& results, ExportFormat format, bool timestamp = true);
void export_results(const ResultSet& results, ExportFormat format, const std::string& path, bool timestamp = true);

/// "%.17g", round-trip exact for doubles.
std::string format_number(double v);

}  // namespace hss
