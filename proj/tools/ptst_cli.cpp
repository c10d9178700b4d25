// ptst: validate instances, solve the lower-bound problem, run sequential
// tests and delta sweeps.

#include "policytest/bench.hpp"
#include "policytest/instance_io.hpp"
#include "policytest/ptst.hpp"
#include "policytest/sampling.hpp"
#include "policytest/solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

using namespace policytest;
using nlohmann::json;

namespace {

struct Common {
  std::string out;
  std::string format = "json";
  int threads = 0;
  std::string mode = "practical";
};

int env_threads(int flag_value) {
  if (const char* env = std::getenv("PTST_THREADS")) {
    try {
      return std::stoi(env);
    } catch (const std::exception&) {
      throw InvalidInput(std::string("PTST_THREADS is not an integer: ") + env);
    }
  }
  return flag_value;
}

void emit(const Common& c, const json& doc, const std::string& csv) {
  const std::string text = c.format == "csv" ? csv : doc.dump(2) + "\n";
  if (c.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(c.out);
  if (!f) throw Error("cannot write " + c.out);
  f << text;
}

json kernel_json(const TransitionKernel& k) {
  json rows = json::array();
  for (int s = 0; s < k.n_states(); ++s) {
    json per_action = json::array();
    for (int a = 0; a < k.n_actions(); ++a) {
      auto r = k.row(s, a);
      per_action.push_back(std::vector<double>(r.begin(), r.end()));
    }
    rows.push_back(per_action);
  }
  return rows;
}

SolverConfig config_for(const std::string& mode, double zeta) {
  return parse_solver_mode(mode) == SolverMode::Faithful ? SolverConfig::faithful(zeta) : SolverConfig::practical();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Policy testing in tabular MDPs"};
  app.require_subcommand(1);
  Common c;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", c.out, "Output path (default: stdout)");
    sub->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--threads", c.threads, "Worker threads (env PTST_THREADS overrides)");
    sub->add_option("--mode", c.mode, "faithful or practical")->check(CLI::IsMember({"faithful", "practical"}));
  };

  std::string instance_arg;

  auto* validate = app.add_subcommand("validate", "Check an instance and its uniform allocation");
  validate->add_option("instance", instance_arg, "Built-in name or JSON file")->required();
  add_common(validate);

  double sigma = 0.1, zeta = 0.05;
  auto* solve = app.add_subcommand("solve", "Approximate u_NO(sigma) on the instance kernel");
  solve->add_option("instance", instance_arg, "Built-in name or JSON file")->required();
  solve->add_option("--sigma", sigma, "KL budget")->required();
  solve->add_option("--zeta", zeta, "Target accuracy");
  add_common(solve);

  auto* ctime = app.add_subcommand("ctime", "Characteristic time of the instance");
  ctime->add_option("instance", instance_arg, "Built-in name or JSON file")->required();
  add_common(ctime);

  double delta = 0.05;
  std::uint64_t seed = 0;
  long max_rounds = 1'000'000, stride = 1;
  bool trace = false;
  auto* run = app.add_subcommand("run", "One sequential test");
  run->add_option("instance", instance_arg, "Built-in name or JSON file")->required();
  run->add_option("--delta", delta, "Confidence parameter")->required();
  run->add_option("--seed", seed, "Random seed");
  run->add_option("--max-rounds", max_rounds, "Sample budget");
  run->add_option("--stride", stride, "Rounds between stopping checks");
  run->add_flag("--trace", trace, "Record every stopping check");
  add_common(run);

  std::string spec_path;
  auto* sweep = app.add_subcommand("sweep", "Seeded delta sweep");
  sweep->add_option("--spec", spec_path, "Sweep spec (JSON)")->required()->check(CLI::ExistingFile);
  add_common(sweep);

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) {
      const BuiltinInstance inst = resolve_instance(instance_arg);
      const ValidationReport rep = validate_instance(inst.instance, &inst.allocation);
      json doc = {{"rho_positive", rep.rho_positive},
                  {"reward_condition", rep.reward_condition},
                  {"policy_full_support", rep.policy_full_support},
                  {"allocation_full_support", rep.allocation_full_support},
                  {"value_nonconstant", rep.value_nonconstant},
                  {"value_nonzero", rep.value_nonzero},
                  {"v_rho", value_rho(inst.instance.kernel, inst.instance)},
                  {"messages", rep.messages},
                  {"valid", rep.all_pass()}};
      std::ostringstream csv;
      csv << "check,pass\n";
      for (const char* k : {"rho_positive", "reward_condition", "policy_full_support", "allocation_full_support",
                            "value_nonconstant", "value_nonzero"})
        csv << k << ',' << (doc[k].get<bool>() ? "true" : "false") << '\n';
      emit(c, doc, csv.str());
      return rep.all_pass() ? 0 : 1;
    }
    if (solve->parsed()) {
      const BuiltinInstance inst = resolve_instance(instance_arg);
      const SolveResult res =
          nested_pgd(inst.instance, inst.instance.kernel, zeta, sigma, inst.allocation, config_for(c.mode, zeta));
      json doc = {{"sigma", sigma},
                  {"zeta", zeta},
                  {"mode", c.mode},
                  {"u", res.u_value},
                  {"v_q", value_rho(res.argmin_kernel, inst.instance)},
                  {"inner_iters", res.inner_iters_used},
                  {"boxes", res.boxes_evaluated},
                  {"converged", res.converged},
                  {"argmin_kernel", kernel_json(res.argmin_kernel)}};
      std::ostringstream csv;
      csv << std::setprecision(17) << "sigma,zeta,mode,u,v_q,inner_iters,boxes,converged\n"
          << sigma << ',' << zeta << ',' << c.mode << ',' << res.u_value << ',' << doc["v_q"].get<double>() << ','
          << res.inner_iters_used << ',' << res.boxes_evaluated << ',' << (res.converged ? "true" : "false") << '\n';
      emit(c, doc, csv.str());
      return 0;
    }
    if (ctime->parsed()) {
      const BuiltinInstance inst = resolve_instance(instance_arg);
      const CharacteristicTimeReport rep = report_characteristic_time(inst.instance, inst.allocation);
      json doc = {{"v_p", rep.v_p},
                  {"t_star", rep.t_star},
                  {"sigma_star", rep.sigma_star},
                  {"minimizer_value", rep.minimizer_value},
                  {"minimizer_weighted_kl", rep.minimizer_weighted_kl},
                  {"predicted_slope", rep.t_star},
                  {"minimizer", kernel_json(rep.minimizer)}};
      std::ostringstream csv;
      csv << std::setprecision(17) << "v_p,t_star,sigma_star,minimizer_value,minimizer_weighted_kl\n"
          << rep.v_p << ',' << rep.t_star << ',' << rep.sigma_star << ',' << rep.minimizer_value << ','
          << rep.minimizer_weighted_kl << '\n';
      emit(c, doc, csv.str());
      return 0;
    }
    if (run->parsed()) {
      const BuiltinInstance inst = resolve_instance(instance_arg);
      PtstOptions opts;
      opts.solver = config_for(c.mode, 0.05);
      opts.max_rounds = max_rounds;
      opts.check_stride = stride;
      opts.record_trace = trace;
      const TestRunRecord rec = ptst_run(inst.instance, inst.allocation, delta, opts, seed);
      std::ostringstream csv;
      csv << std::setprecision(17) << "delta,seed,tau,decision,correct\n"
          << rec.delta << ',' << rec.seed << ',' << rec.tau << ','
          << (rec.decision ? to_string(*rec.decision) : "none") << ','
          << (rec.correct ? (*rec.correct ? "true" : "false") : "na") << '\n';
      emit(c, to_json(rec), csv.str());
      return 0;
    }
    if (sweep->parsed()) {
      std::ifstream f(spec_path);
      json doc;
      try {
        doc = json::parse(f);
      } catch (const json::exception& e) {
        throw InvalidInput(std::string("sweep spec: ") + e.what());
      }
      SweepSpec spec = sweep_spec_from_json(doc);
      if (!sweep->get_option("--out")->empty()) spec.output = c.out;
      if (!sweep->get_option("--format")->empty()) spec.format = c.format;
      if (!sweep->get_option("--mode")->empty()) spec.mode = parse_solver_mode(c.mode);
      if (!sweep->get_option("--threads")->empty()) spec.threads = c.threads;
      spec.threads = env_threads(spec.threads);
      spec.validate();
      const SweepResult res = run_sweep(spec);
      if (spec.output.empty()) {
        if (spec.format == "json") {
          std::cout << sweep_to_json(res).dump(2) << '\n';
        } else {
          write_rows_csv(std::cout, res.rows);
          std::cout << '\n';
          write_summary_csv(std::cout, res.summary);
        }
      } else {
        write_sweep(spec, res);
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
