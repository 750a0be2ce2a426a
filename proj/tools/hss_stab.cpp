// hss-stab: harmonic stability analysis of converter-interfaced grids.

#include <cstdio>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "hss/errors.hpp"
#include "hss/scenario.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitUnstable = 4;

void error_record(const std::string& kind, const std::string& message) {
  nlohmann::json rec;
  rec["error"]["kind"] = kind;
  rec["error"]["message"] = message;
  std::cerr << rec.dump() << "\n";
}

std::complex<double> parse_point(const std::string& text) {
  std::stringstream ss(text);
  double re = 0.0, im = 0.0;
  char comma = 0;
  if (!(ss >> re >> comma >> im) || comma != ',' || !ss.eof())
    hss::fail(hss::ErrorKind::configuration, "--s expects 're,im', got '" + text + "'");
  return {re, im};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Harmonic state-space stability analysis"};
  app.set_version_flag("--version", "hss-stab 1.0");

  std::string command, scenario_path, out_path, format, target = "system", sweep;
  std::optional<int> hmax, hmax_probe;
  int jobs = 1;
  bool no_timestamp = false, fail_on_unstable = false;
  std::vector<std::string> control, hardware, points;
  std::string htf_in, htf_out;

  app.add_option("command", command, "eig | htf | sweep | classify | spurious")
      ->required()
      ->check(CLI::IsMember({"eig", "htf", "sweep", "classify", "spurious"}));
  app.add_option("--scenario", scenario_path, "scenario JSON file")->required();
  app.add_option("--out", out_path, "output file (default: stdout)");
  app.add_option("--format", format, "csv or json (default: from --out extension, else csv)")
      ->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--hmax", hmax, "override the scenario truncation order");
  app.add_option("--jobs", jobs, "parallel sweep builds")->check(CLI::PositiveNumber);
  app.add_flag("--no-timestamp", no_timestamp, "omit the timestamp header line");
  app.add_flag("--fail-on-unstable", fail_on_unstable, "exit 4 if an unstable eigenvalue is found");
  app.add_option("--target", target, "system | grid | cider:<name>");
  app.add_option("--sweep", sweep, "sweep name (default: first in scenario)");
  app.add_option("--control", control, "control parameter paths (classify)")->delimiter(',');
  app.add_option("--hardware", hardware, "hardware parameter paths (classify)")->delimiter(',');
  app.add_option("--hmax-probe", hmax_probe, "probe order for spurious detection (default hmax+3)");
  app.add_option("--s", points, "HTF evaluation point 're,im' (repeatable)");
  app.add_option("--input", htf_in, "HTF input segment");
  app.add_option("--output", htf_out, "HTF output segment");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    error_record("usage", e.what());
    return kExitValidation;
  }

  try {
    hss::CommandOptions opt;
    opt.hmax = hmax;
    opt.hmax_probe = hmax_probe;
    opt.jobs = jobs;
    opt.target = target;
    opt.sweep = sweep;
    opt.control = control;
    opt.hardware = hardware;
    for (const auto& p : points) opt.s_points.push_back(parse_point(p));
    opt.htf_input = htf_in;
    opt.htf_output = htf_out;

    const hss::Scenario sc = hss::load_scenario(scenario_path);
    const hss::ResultSet res = hss::run_command(command, sc, opt);

    if (format.empty()) {
      const bool json_ext = out_path.size() >= 5 && out_path.compare(out_path.size() - 5, 5, ".json") == 0;
      format = json_ext ? "json" : "csv";
    }
    const auto fmt = format == "json" ? hss::ExportFormat::json : hss::ExportFormat::csv;
    if (out_path.empty()) {
      std::cout << hss::format_results(res, fmt, !no_timestamp);
      std::cout.flush();
    } else {
      hss::export_results(res, fmt, out_path, !no_timestamp);
    }
    if (fail_on_unstable && res.unstable.value_or(false)) return kExitUnstable;
    return 0;
  } catch (const hss::Error& e) {
    error_record(std::string(hss::to_string(e.kind())), e.what());
    return hss::is_validation_error(e.kind()) ? kExitValidation : kExitNumerical;
  } catch (const std::exception& e) {
    error_record("numerical", e.what());
    return kExitNumerical;
  }
}
