#include "policytest/bench.hpp"

#include "policytest/instance_io.hpp"
#include "policytest/sampling.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace policytest {

namespace {

using Rows = std::vector<std::vector<double>>;

Mat to_matrix(const Rows& rows) {
  Mat m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

Mat normalize_rows(Mat m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) m.row(i) /= m.row(i).sum();
  return m;
}

// `kernel` lists the rows p(. | s, a) in (s, a) lexicographic order.
MdpInstance tabulated(int ns, int na, const Rows& reward, const Rows& kernel, const Rows& policy, double gamma) {
  KernelArray arr(ns, na);
  for (int s = 0; s < ns; ++s)
    for (int a = 0; a < na; ++a) {
      const auto& row = kernel[s * na + a];
      double sum = 0.0;
      for (double x : row) sum += x;
      for (int s2 = 0; s2 < ns; ++s2) arr(s, a, s2) = row[s2] / sum;
    }
  return make_instance(TransitionKernel(std::move(arr), 1e-9), to_matrix(reward), Vec::Constant(ns, 1.0 / ns), gamma,
                       normalize_rows(to_matrix(policy)));
}

MdpInstance two_state() {
  return tabulated(2, 2, {{0.50, -0.175}, {-0.775, 1.00}},
                   {{0.700, 0.300}, {0.400, 0.600}, {0.800, 0.200}, {0.100, 0.900}},
                   {{0.150, 0.850}, {0.507, 0.493}}, 0.9);
}

MdpInstance three_state() {
  return tabulated(3, 3, {{-0.20, 0.02, -0.01}, {-0.50, -0.01, 0.50}, {-0.01, -0.05, 0.20}},
                   {{0.3460, 0.5027, 0.1513},
                    {0.2230, 0.7014, 0.0756},
                    {0.4077, 0.3005, 0.2919},
                    {0.2711, 0.5011, 0.2277},
                    {0.1711, 0.6011, 0.2277},
                    {0.1711, 0.1011, 0.7277},
                    {0.2433, 0.5999, 0.1568},
                    {0.1867, 0.2998, 0.5135},
                    {0.4033, 0.0993, 0.4974}},
                   {{0.6, 0.3, 0.1}, {0.333, 0.333, 0.333}, {0.1, 0.2, 0.7}}, 0.9);
}

MdpInstance five_state() {
  const Rows reward = {{0.11596, -0.10323, 0.07086, -0.14514, 0.01885},
                       {-0.08898, 0.18378, 0.20909, 0.18429, -0.00352},
                       {-0.11392, 0.23644, -0.15099, -0.20320, -0.23474},
                       {0.10058, 0.08980, 0.00906, 0.19939, 0.02957},
                       {0.11086, 0.02878, -0.12984, 0.17238, 0.03751}};
  const Rows kernel = {{0.0191, 0.2797, 0.3241, 0.0813, 0.2958}, {0.2279, 0.2631, 0.0458, 0.2566, 0.2066},
                       {0.1418, 0.2505, 0.2561, 0.2799, 0.0718}, {0.3117, 0.1916, 0.0851, 0.1691, 0.2424},
                       {0.1199, 0.6589, 0.2133, 0.0040, 0.0038}, {0.1452, 0.3076, 0.0715, 0.1816, 0.2941},
                       {0.4654, 0.0252, 0.2148, 0.2654, 0.0292}, {0.2123, 0.0780, 0.2095, 0.2257, 0.2745},
                       {0.2350, 0.1905, 0.1488, 0.1254, 0.3003}, {0.0091, 0.3348, 0.0134, 0.1328, 0.5099},
                       {0.2699, 0.3663, 0.2291, 0.0208, 0.1139}, {0.2535, 0.2019, 0.1512, 0.2041, 0.1893},
                       {0.3340, 0.2574, 0.1303, 0.1418, 0.1365}, {0.1428, 0.1237, 0.1114, 0.0747, 0.5474},
                       {0.1530, 0.3078, 0.1651, 0.3379, 0.0362}, {0.0043, 0.3403, 0.1235, 0.0826, 0.4493},
                       {0.0870, 0.3120, 0.0742, 0.2682, 0.2587}, {0.1755, 0.2717, 0.1635, 0.1257, 0.2637},
                       {0.2272, 0.1819, 0.2460, 0.0933, 0.2516}, {0.2717, 0.1775, 0.0811, 0.1830, 0.2868},
                       {0.2812, 0.0261, 0.0534, 0.4150, 0.2243}, {0.2381, 0.2541, 0.1767, 0.2693, 0.0617},
                       {0.4520, 0.1074, 0.0020, 0.1489, 0.2897}, {0.3384, 0.0184, 0.1746, 0.3144, 0.1541},
                       {0.0686, 0.1741, 0.2139, 0.1872, 0.3563}};
  const Rows policy = {{0.1535, 0.2298, 0.0998, 0.2521, 0.2648},
                       {0.2159, 0.2917, 0.1054, 0.0903, 0.2967},
                       {0.0452, 0.0699, 0.1839, 0.3681, 0.3329},
                       {0.2078, 0.3493, 0.0826, 0.2214, 0.1389},
                       {0.2311, 0.1292, 0.2522, 0.2173, 0.1701}};
  return tabulated(5, 5, reward, kernel, policy, 0.9);
}

const Rows kNonconvexQ1 = {{0, 1, 0}, {0, 1, 0}, {0, 0, 1}};
const Rows kNonconvexQ2 = {{0, 0.5, 0.5}, {1, 0, 0}, {0, 0, 1}};

MdpInstance nonconvex_example() {
  Rows mid(3, std::vector<double>(3));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) mid[i][j] = 0.5 * (kNonconvexQ1[i][j] + kNonconvexQ2[i][j]);
  return tabulated(3, 1, {{-0.88}, {0.12}, {0.12}}, mid, {{1.0}, {1.0}, {1.0}}, 0.9);
}

TransitionKernel single_action_kernel(const Rows& rows) {
  KernelArray arr(3, 1);
  for (int s = 0; s < 3; ++s)
    for (int s2 = 0; s2 < 3; ++s2) arr(s, 0, s2) = rows[s][s2];
  return TransitionKernel(std::move(arr));
}

}  // namespace

std::vector<std::string> builtin_names() { return {"two_state", "three_state", "five_state", "nonconvex_example"}; }

BuiltinInstance builtin_instance(const std::string& name) {
  MdpInstance m;
  if (name == "two_state")
    m = two_state();
  else if (name == "three_state")
    m = three_state();
  else if (name == "five_state")
    m = five_state();
  else if (name == "nonconvex_example")
    m = nonconvex_example();
  else
    throw InvalidInput("unknown built-in instance '" + name + "'");
  Allocation w = Allocation::uniform(m.n_states, m.n_actions);
  return {std::move(m), std::move(w)};
}

std::pair<TransitionKernel, TransitionKernel> nonconvex_alternatives() {
  return {single_action_kernel(kNonconvexQ1), single_action_kernel(kNonconvexQ2)};
}

BuiltinInstance resolve_instance(const std::string& name_or_path) {
  for (const auto& n : builtin_names())
    if (n == name_or_path) return builtin_instance(n);
  if (!std::filesystem::exists(name_or_path))
    throw InvalidInput("'" + name_or_path + "' is neither a built-in instance nor a file");
  MdpInstance m = load_instance_file(name_or_path);
  Allocation w = Allocation::uniform(m.n_states, m.n_actions);
  return {std::move(m), std::move(w)};
}

void SweepSpec::validate() const {
  if (delta_grid.empty()) throw InvalidInput("sweep: empty delta grid");
  for (double d : delta_grid)
    if (!(d > 0.0 && d < 1.0)) throw InvalidInput("sweep: delta values must lie in (0, 1)");
  if (trials < 1) throw InvalidInput("sweep: trials must be at least 1");
  if (check_stride < 1) throw InvalidInput("sweep: check_stride must be at least 1");
  if (format != "csv" && format != "json") throw InvalidInput("sweep: format must be csv or json");
}

SweepSpec sweep_spec_from_json(const nlohmann::json& doc) {
  SweepSpec spec;
  try {
    spec.instance = doc.value("instance", spec.instance);
    spec.delta_grid = doc.value("delta_grid", spec.delta_grid);
    spec.trials = doc.value("trials", spec.trials);
    spec.seed = doc.value("seed", spec.seed);
    spec.mode = parse_solver_mode(doc.value("mode", std::string("practical")));
    spec.output = doc.value("output", spec.output);
    spec.format = doc.value("format", spec.format);
    spec.threads = doc.value("threads", spec.threads);
    spec.check_stride = doc.value("check_stride", spec.check_stride);
    spec.max_rounds = doc.value("max_rounds", spec.max_rounds);
    spec.time_budget_s = doc.value("time_budget_s", spec.time_budget_s);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("sweep spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

SweepResult run_sweep(const SweepSpec& spec) {
  spec.validate();
  const BuiltinInstance inst = resolve_instance(spec.instance);
  PtstOptions opts;
  opts.solver = spec.mode == SolverMode::Faithful ? SolverConfig::faithful(0.05) : SolverConfig::practical();
  opts.check_stride = spec.check_stride;
  opts.max_rounds = spec.max_rounds;

  unsigned workers = spec.threads > 0 ? static_cast<unsigned>(spec.threads) : std::thread::hardware_concurrency();
  workers = std::max(1u, workers);

  const auto start = std::chrono::steady_clock::now();
  SweepResult result;
  for (double delta : spec.delta_grid) {
    if (spec.time_budget_s > 0.0 && !result.summary.empty() &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() > spec.time_budget_s)
      break;
    std::vector<TrialRow> rows(spec.trials);
    std::atomic<int> next{0};
    std::mutex error_mutex;
    std::string first_error;
    auto work = [&]() {
      for (int i = next++; i < spec.trials; i = next++) {
        try {
          const std::uint64_t seed = trial_seed(spec.seed, static_cast<std::uint64_t>(i));
          const auto t0 = std::chrono::steady_clock::now();
          const TestRunRecord rec = ptst_run(inst.instance, inst.allocation, delta, opts, seed);
          TrialRow& row = rows[i];
          row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
          row.delta = delta;
          row.trial = i;
          row.seed = seed;
          row.tau = rec.tau;
          row.decision = rec.decision ? to_string(*rec.decision) : "none";
          row.correct = rec.correct ? (*rec.correct ? "true" : "false") : "na";
          row.solver_mode = to_string(spec.mode);
        } catch (const std::exception& e) {
          std::lock_guard lock(error_mutex);
          if (first_error.empty()) first_error = e.what();
        }
      }
    };
    {
      std::vector<std::jthread> pool;
      for (unsigned k = 1; k < workers; ++k) pool.emplace_back(work);
      work();
    }
    if (!first_error.empty()) throw Error("sweep trial failed: " + first_error);

    SweepSummary sum;
    sum.delta = delta;
    sum.trials = spec.trials;
    int stopped = 0, wrong = 0;
    double mean = 0.0, sq = 0.0;
    for (const TrialRow& r : rows) {
      if (r.decision == "none") {
        ++sum.budget_exceeded;
        continue;
      }
      ++stopped;
      if (r.correct == "false") ++wrong;
      mean += static_cast<double>(r.tau);
    }
    if (stopped > 0) {
      mean /= stopped;
      for (const TrialRow& r : rows)
        if (r.decision != "none") sq += (r.tau - mean) * (r.tau - mean);
      sum.mean_tau = mean;
      sum.stderr_tau = stopped > 1 ? std::sqrt(sq / (stopped - 1) / stopped) : 0.0;
      sum.error_fraction = static_cast<double>(wrong) / stopped;
    }
    result.summary.push_back(sum);
    result.rows.insert(result.rows.end(), rows.begin(), rows.end());
  }
  return result;
}

void write_rows_csv(std::ostream& out, const std::vector<TrialRow>& rows) {
  out << kSweepCsvHeader << '\n';
  for (const TrialRow& r : rows) {
    out << std::setprecision(17) << r.delta << ',' << r.trial << ',' << r.seed << ',' << r.tau << ',' << r.decision
        << ',' << r.correct << ',' << std::fixed << std::setprecision(3) << r.wall_ms << std::defaultfloat << ','
        << r.solver_mode << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<SweepSummary>& summary) {
  out << "delta,trials,mean_tau,stderr_tau,error_fraction,budget_exceeded\n";
  for (const SweepSummary& s : summary)
    out << std::setprecision(17) << s.delta << ',' << s.trials << ',' << s.mean_tau << ',' << s.stderr_tau << ','
        << s.error_fraction << ',' << s.budget_exceeded << '\n';
}

nlohmann::json sweep_to_json(const SweepResult& result) {
  nlohmann::json doc;
  auto& records = doc["records"] = nlohmann::json::array();
  for (const TrialRow& r : result.rows)
    records.push_back({{"delta", r.delta},
                       {"trial", r.trial},
                       {"seed", r.seed},
                       {"tau", r.tau},
                       {"decision", r.decision},
                       {"correct", r.correct},
                       {"wall_ms", r.wall_ms},
                       {"solver_mode", r.solver_mode}});
  auto& summary = doc["summary"] = nlohmann::json::array();
  for (const SweepSummary& s : result.summary)
    summary.push_back({{"delta", s.delta},
                       {"trials", s.trials},
                       {"mean_tau", s.mean_tau},
                       {"stderr_tau", s.stderr_tau},
                       {"error_fraction", s.error_fraction},
                       {"budget_exceeded", s.budget_exceeded}});
  return doc;
}

void write_sweep(const SweepSpec& spec, const SweepResult& result) {
  if (spec.output.empty()) return;
  std::ofstream out(spec.output);
  if (!out) throw Error("cannot write " + spec.output);
  if (spec.format == "json") {
    out << sweep_to_json(result).dump(2) << '\n';
    return;
  }
  write_rows_csv(out, result.rows);
  std::ofstream summary(spec.output + ".summary.csv");
  if (!summary) throw Error("cannot write " + spec.output + ".summary.csv");
  write_summary_csv(summary, result.summary);
}

CharacteristicTimeReport report_characteristic_time(const MdpInstance& m, const Allocation& w,
                                                    const SolverConfig& config) {
  const ValidationReport rep = validate_instance(m, &w);
  if (!rep.all_pass()) {
    std::string msg = "instance fails validation:";
    for (const auto& line : rep.messages) msg += " " + line + ";";
    throw InvalidInput(msg);
  }
  const CharacteristicTime ct = characteristic_time(m, m.kernel, w, config);
  CharacteristicTimeReport out;
  out.v_p = value_rho(m.kernel, m);
  out.t_star = ct.t_star;
  out.sigma_star = ct.inverse;
  out.minimizer_value = ct.minimizer_value;
  out.minimizer_weighted_kl = weighted_kl(w, m.kernel, ct.minimizer);
  out.minimizer = ct.minimizer;
  return out;
}

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidInput("slope needs at least two paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw InvalidInput("slope: x values are all equal");
  return sxy / sxx;
}

}  // namespace policytest
