// territory <scenario> --config <path> [--set key=value]... --out <dir>
// territory validate --config <path> [--set key=value]...

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "territory/error.hpp"
#include "territory/io.hpp"
#include "territory/scenario.hpp"

namespace {

using territory::io::json;

struct Invocation {
  std::string config;
  std::vector<std::string> sets;
  std::string out = "out";
};

json load_document(const Invocation& inv, const std::string& scenario) {
  json doc = territory::io::read_json(inv.config);
  for (const auto& s : inv.sets) territory::apply_override(doc, s);
  if (!scenario.empty() && doc.is_object()) doc["scenario"] = scenario;
  return doc;
}

int report_error(const std::string& kind, const std::string& message, const std::string& field, int code,
                 const std::string& out) {
  const json err{{"status", "error"}, {"kind", kind}, {"message", message}, {"field", field}, {"exit_code", code}};
  std::cerr << err.dump() << '\n';
  if (!out.empty()) {
    try {
      territory::io::write_json(std::filesystem::path(out) / "error.json", err);
    } catch (const std::exception&) {
    }
  }
  return code;
}

template <class F>
int guarded(F&& body, const std::string& out) {
  try {
    return body();
  } catch (const territory::Error& e) {
    return report_error(e.kind(), e.what(), e.field(), e.is_config_error() ? 2 : 1, out);
  } catch (const json::exception& e) {
    return report_error("ConfigError", e.what(), "", 2, out);
  } catch (const std::exception& e) {
    return report_error("InternalError", e.what(), "", 1, out);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Predator-prey competition toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(territory::kVersion));

  std::vector<std::pair<std::string, Invocation>> runs;
  runs.reserve(territory::scenario_names().size() + 1);
  for (const auto& name : territory::scenario_names()) {
    runs.emplace_back(name, Invocation{});
    Invocation& inv = runs.back().second;
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " scenario");
    sub->add_option("--config", inv.config, "JSON config file")->required();
    sub->add_option("--set", inv.sets, "override a config field, key=value (repeatable)");
    sub->add_option("--out", inv.out, "output directory")->capture_default_str();
  }
  Invocation check;
  CLI::App* validate = app.add_subcommand("validate", "print configuration diagnostics as JSON");
  validate->add_option("--config", check.config, "JSON config file")->required();
  validate->add_option("--set", check.sets, "override a config field, key=value (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (validate->parsed()) {
    return guarded(
        [&] {
          const territory::ScenarioConfig cfg = territory::load_config(load_document(check, ""));
          json diags = json::array();
          for (const auto& d : territory::validate(cfg)) diags.push_back(territory::to_json(d));
          std::cout << diags.dump(2) << '\n';
          return 0;
        },
        "");
  }

  for (auto& [name, inv] : runs) {
    if (!app.got_subcommand(name)) continue;
    return guarded(
        [&, name = name, inv = inv] {
          const territory::ScenarioConfig cfg = territory::load_config(load_document(inv, name));
          const territory::ScenarioResult r = territory::run_scenario(cfg, inv.out);
          std::cout << name << ": wrote " << r.artifacts.size() + 1 << " files to " << inv.out << '\n';
          return 0;
        },
        inv.out);
  }
  return 2;
}
