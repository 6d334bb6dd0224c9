#include <chrono>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "derms/io.hpp"
#include "derms/oracle.hpp"
#include "derms/sim.hpp"

namespace {

// Error categories, one line on stderr, machine-parseable. Exit codes:
// 2 config, 3 io, 4 runtime.
int fail(const char* category, const std::string& message, int code) {
  std::cerr << "error category=" << category << ": " << message << "\n";
  return code;
}

int cmd_run(const std::string& scenario_arg, const std::string& mode_arg, std::uint64_t seed,
            const std::string& out_dir, const std::vector<std::string>& overrides) {
  const derms::RunMode mode =
      mode_arg == "manual" ? derms::RunMode::manual : derms::RunMode::adaptive;
  derms::Scenario sc = derms::resolve_scenario(scenario_arg, mode, seed);
  for (const std::string& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos) {
      throw derms::ConfigError("override '" + ov + "': expected key=value");
    }
    derms::apply_override(sc, ov.substr(0, eq), ov.substr(eq + 1));
  }
  sc.validate();

  std::filesystem::create_directories(out_dir);
  const auto t0 = std::chrono::steady_clock::now();
  const derms::Trajectory tr = derms::run(sc);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  derms::RunReport rep = derms::make_report(sc, tr, secs);
  const std::string tag = sc.id + "-" + rep.mode;
  rep.trajectory_csv = out_dir + "/" + tag + ".csv";
  rep.summary_json = out_dir + "/" + tag + ".json";
  derms::write_trajectory_csv(tr, sc.network.base_power_w, rep.trajectory_csv);
  derms::write_report_json(rep, rep.summary_json);

  std::cout << "scenario " << sc.id << " mode=" << rep.mode << " seed=" << sc.seed << " ticks="
            << rep.ticks << " runtime_s=" << rep.runtime_s << "\n";
  for (const derms::ServiceReport& s : rep.services) {
    std::cout << "  service " << s.id << ": max_violation=" << s.metrics.max_violation
              << " integral_violation=" << s.metrics.integral_violation
              << " oscillations=" << s.metrics.oscillation_count << " final_beta=" << s.final_beta
              << "\n";
  }
  for (const auto& [id, alpha] : rep.final_alpha) {
    std::cout << "  der " << id << ": final_alpha=" << alpha << "\n";
  }
  std::cout << "  wrote " << rep.trajectory_csv << "\n  wrote " << rep.summary_json << "\n";
  if (!rep.completed) {
    std::cout << "  run aborted: " << rep.diagnostic << "\n";
    return 4;
  }
  return 0;
}

int cmd_compare(const std::string& a_path, const std::string& b_path, const std::string& out) {
  const derms::RunReport a = derms::report_from_json_file(a_path);
  const derms::RunReport b = derms::report_from_json_file(b_path);
  const derms::Comparison cmp = derms::compare_reports(a, b);
  std::cout << cmp.text;
  if (!out.empty()) {
    std::ofstream f(out);
    if (!f) throw std::ios_base::failure("cannot write '" + out + "'");
    f << cmp.json << "\n";
    std::cout << "wrote " << out << "\n";
  }
  return 0;
}

int cmd_catalog() {
  for (const std::string& name : derms::builtin_scenario_names()) {
    for (const char* mode : {"adaptive", "manual"}) {
      const derms::Scenario sc = derms::builtin_scenario(name, std::string(mode) == "manual"
                                                                   ? derms::RunMode::manual
                                                                   : derms::RunMode::adaptive,
                                                         0);
      std::cout << name << " [" << mode << "]: " << sc.description << " (horizon "
                << sc.horizon_s << " s, tick " << sc.tick_s << " s, " << sc.devices.size()
                << " DERs, " << sc.services.size() << " services)\n";
    }
  }
  return 0;
}

int cmd_oracle(const std::string& instance_path, const std::string& out) {
  const derms::CentralInstance inst = derms::central_instance_from_json_file(instance_path);
  const derms::CentralSolution sol = derms::solve_central(inst);
  std::cout << "solved in " << sol.iterations << " iterations, kkt_residual=" << sol.kkt_residual
            << "\n";
  std::ostringstream os;
  os << "{\n  \"objective\": " << sol.objective << ",\n  \"iterations\": " << sol.iterations
     << ",\n  \"kkt_residual\": " << sol.kkt_residual << ",\n  \"p_pu\": [";
  for (Eigen::Index i = 0; i < sol.p_pu.size(); ++i) {
    os << (i ? ", " : "") << sol.p_pu(i);
  }
  os << "],\n  \"q_pu\": [";
  for (Eigen::Index i = 0; i < sol.q_pu.size(); ++i) {
    os << (i ? ", " : "") << sol.q_pu(i);
  }
  os << "],\n  \"d_lower\": [";
  for (Eigen::Index i = 0; i < sol.d_lower.size(); ++i) {
    os << (i ? ", " : "") << sol.d_lower(i);
  }
  os << "],\n  \"d_upper\": [";
  for (Eigen::Index i = 0; i < sol.d_upper.size(); ++i) {
    os << (i ? ", " : "") << sol.d_upper(i);
  }
  os << "]\n}\n";
  if (out.empty()) {
    std::cout << os.str();
  } else {
    std::ofstream f(out);
    if (!f) throw std::ios_base::failure("cannot write '" + out + "'");
    f << os.str();
    std::cout << "wrote " << out << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"derms: primal-dual DER control with adaptive step-size tuning"};
  app.require_subcommand(1);

  std::string scenario, mode = "adaptive", out_dir = "out", compare_out, instance_path;
  std::string report_a, report_b;
  std::uint64_t seed = 1;
  std::vector<std::string> overrides;

  CLI::App* run = app.add_subcommand("run", "run a scenario and write trajectory + summary");
  run->add_option("--scenario", scenario, "built-in name or scenario JSON path")->required();
  run->add_option("--mode", mode, "adaptive|manual")
      ->check(CLI::IsMember({"adaptive", "manual"}));
  run->add_option("--seed", seed, "profile seed");
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--set", overrides, "key=value override (repeatable)");

  CLI::App* cmp = app.add_subcommand("compare", "compare two run summaries");
  cmp->add_option("a", report_a, "summary JSON of run A")->required();
  cmp->add_option("b", report_b, "summary JSON of run B")->required();
  cmp->add_option("--out", compare_out, "write machine-readable comparison JSON here");

  CLI::App* cat = app.add_subcommand("catalog", "list built-in scenarios");

  CLI::App* orc = app.add_subcommand("oracle", "solve a central-instance file");
  orc->add_option("--instance", instance_path, "instance JSON path")->required();
  orc->add_option("--out", compare_out, "write the solution JSON here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "error category=usage: " << e.what() << "\n";
    return 2;
  }

  try {
    if (run->parsed()) return cmd_run(scenario, mode, seed, out_dir, overrides);
    if (cmp->parsed()) return cmd_compare(report_a, report_b, compare_out);
    if (cat->parsed()) return cmd_catalog();
    if (orc->parsed()) return cmd_oracle(instance_path, compare_out);
  } catch (const derms::ConfigError& e) {
    return fail("config", e.what(), 2);
  } catch (const std::invalid_argument& e) {
    return fail("config", e.what(), 2);
  } catch (const std::out_of_range& e) {
    return fail("config", e.what(), 2);
  } catch (const std::ios_base::failure& e) {
    return fail("io", e.what(), 3);
  } catch (const std::exception& e) {
    return fail("runtime", e.what(), 4);
  }
  return 0;
}
