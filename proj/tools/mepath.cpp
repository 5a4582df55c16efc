// mepath command-line front end.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mepath/analysis.hpp"
#include "mepath/cv.hpp"
#include "mepath/error.hpp"
#include "mepath/io.hpp"
#include "mepath/lbi.hpp"
#include "mepath/parallel.hpp"
#include "mepath/simulation.hpp"

namespace fs = std::filesystem;
using namespace mepath;

namespace {

struct DatasetArgs {
  std::string comparisons;
  std::string features = "identity";
};

struct SolverArgs {
  std::string loss = "bt";
  std::string penalty = "auto";
  double kappa = 100.0;
  std::string alpha = "auto";
  std::size_t iters = 1000;
  std::optional<double> t_max;
  std::size_t threads = 1;
  std::size_t record_every = 10;
  std::uint64_t seed = 0;
  double tol_spectral = 1e-4;
};

void add_dataset_flags(CLI::App* cmd, DatasetArgs& args) {
  cmd->add_option("--comparisons", args.comparisons,
                  "comparisons CSV (user,left,right,y[,weight])")
      ->required();
  cmd->add_option("--features", args.features,
                  "features CSV (item,f0,...) or 'identity'")
      ->capture_default_str();
}

void add_solver_flags(CLI::App* cmd, SolverArgs& args) {
  cmd->add_option("--loss", args.loss, "linear, bt or tm")
      ->check(CLI::IsMember({"linear", "bt", "tm"}))
      ->capture_default_str();
  cmd->add_option("--penalty", args.penalty,
                  "group, entrywise or auto (group for identity features)")
      ->check(CLI::IsMember({"group", "entrywise", "auto"}))
      ->capture_default_str();
  cmd->add_option("--kappa", args.kappa, "damping factor")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--alpha", args.alpha, "step size or 'auto'")->capture_default_str();
  cmd->add_option("--iters", args.iters, "iteration count K")->capture_default_str();
  cmd->add_option("--t-max", args.t_max,
                  "run until path time t_max (overrides --iters)");
  cmd->add_option("--threads", args.threads, "worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--record-every", args.record_every, "snapshot stride")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--seed", args.seed, "seed")->capture_default_str();
  cmd->add_option("--tol-spectral", args.tol_spectral,
                  "relative tolerance of the spectral norm estimate")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

double parse_number(const std::string& text, const std::string& what) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || text.empty()) {
    throw Error(ErrorCode::kInvalidConfig,
                what + ": '" + text + "' is not a number");
  }
  return value;
}

SolverConfig solver_config(const SolverArgs& args) {
  SolverConfig c;
  c.family = parse_loss(args.loss);
  if (args.penalty != "auto") c.mode = parse_penalty(args.penalty);
  c.kappa = args.kappa;
  if (args.alpha != "auto") c.alpha = parse_number(args.alpha, "--alpha");
  c.max_iters = args.iters;
  c.t_max = args.t_max;
  c.record_every = args.record_every;
  c.seed = args.seed;
  c.threads = args.threads;
  c.tol_spectral = args.tol_spectral;
  return c;
}

ComparisonDataset load(const DatasetArgs& args) {
  std::optional<fs::path> features;
  if (args.features != "identity") features = args.features;
  ComparisonDataset ds = io::load_dataset(args.comparisons, features);
  if (!ds.items_connected()) {
    std::cerr << "warning: the comparison graph is disconnected; common scores "
                 "are only comparable within components\n";
  }
  return ds;
}

// Resolves the step before iterating so the printed config is complete.
void print_config(std::ostream& out, const DatasetArgs& data,
                  const ComparisonDataset& ds, const SolverConfig& c,
                  const StepPlan& plan) {
  out << "# resolved configuration\n";
  out << "comparisons = \"" << data.comparisons << "\"\n";
  out << "features = \"" << data.features << "\"\n";
  out << "records = " << ds.size() << "\n";
  out << "users = " << ds.n_users() << "\n";
  out << "items = " << ds.n_items() << "\n";
  out << "dim = " << ds.dim() << "\n";
  out << "loss = \"" << loss_name(c.family) << "\"\n";
  out << "penalty = \"" << penalty_name(plan.mode) << "\"\n";
  out << "kappa = " << io::format_real(c.kappa) << "\n";
  out << "alpha = " << io::format_real(plan.alpha)
      << (c.alpha ? "" : "  # auto") << "\n";
  out << "spectral-norm = " << io::format_real(plan.spectral_norm) << "\n";
  out << "iters = " << plan.iterations << "\n";
  if (c.t_max) out << "t-max = " << io::format_real(*c.t_max) << "\n";
  out << "record-every = " << c.record_every << "\n";
  out << "threads = " << c.threads << "\n";
  out << "seed = " << c.seed << "\n";
  out << "tol-spectral = " << io::format_real(c.tol_spectral) << "\n";
}

std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> grid;
  if (spec == "auto") return grid;
  // A literal comma-separated list, otherwise a file of values separated by
  // commas or whitespace.
  auto parse_list = [](std::string text, std::vector<double>& out) {
    std::replace(text.begin(), text.end(), ',', ' ');
    std::istringstream in(text);
    std::string token;
    while (in >> token) {
      if (token.front() == '#') {
        std::getline(in, token);
        continue;
      }
      double v = 0.0;
      const auto [ptr, ec] =
          std::from_chars(token.data(), token.data() + token.size(), v);
      if (ec != std::errc() || ptr != token.data() + token.size()) return false;
      out.push_back(v);
    }
    return true;
  };
  if (parse_list(spec, grid) && !grid.empty()) return grid;
  grid.clear();
  const std::string text = io::read_file(spec);
  if (!parse_list(text, grid) || grid.empty()) {
    throw Error(ErrorCode::kParseError, "t grid file '" + spec + "' has no valid values");
  }
  return grid;
}

// Test records scored against a model fitted on `train`: users and items are
// matched by id; users the model has not seen use the common predictor.
std::vector<ScoredRecord> match_records(const ComparisonDataset& train,
                                        const ComparisonDataset& test) {
  std::map<std::string, std::size_t, std::less<>> users;
  std::map<std::string, std::size_t, std::less<>> items;
  for (std::size_t u = 0; u < train.n_users(); ++u) users.emplace(train.user_ids()[u], u);
  for (std::size_t i = 0; i < train.n_items(); ++i) items.emplace(train.item_ids()[i], i);
  std::vector<ScoredRecord> out;
  for (const ComparisonRecord& r : test.records()) {
    ScoredRecord s;
    if (const auto it = users.find(r.user); it != users.end()) s.user = it->second;
    for (int side = 0; side < 2; ++side) {
      const std::string& id = test.item_ids()[side == 0 ? r.left : r.right];
      const auto it = items.find(id);
      if (it == items.end()) {
        throw Error(ErrorCode::kItemIndexOutOfRange,
                    "test item '" + id + "' is unknown to the model");
      }
      (side == 0 ? s.left : s.right) = it->second;
    }
    s.outcome = r.outcome;
    out.push_back(s);
  }
  return out;
}

// ---- simulate ----

struct SimulateArgs {
  SimConfig config;
  std::string family = "bt";
  std::string out = ".";
};

int run_simulate(const SimulateArgs& args) {
  SimConfig config = args.config;
  config.family = parse_loss(args.family);
  const Simulation sim = generate(config);
  const fs::path dir(args.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create '" + dir.string() + "'");
  io::save_dataset(sim.dataset, dir / "comparisons.csv", dir / "features.csv");
  io::save_state(sim.truth, sim.dataset, dir / "truth.json");
  io::write_file(dir / "ids.csv", io::id_map_csv(sim.dataset));
  std::cout << "records = " << sim.dataset.size() << "\n"
            << "users = " << sim.dataset.n_users() << "\n"
            << "items = " << sim.dataset.n_items() << "\n"
            << "dataset-hash = \"" << io::dataset_hash(sim.dataset) << "\"\n";
  return 0;
}

// ---- fit ----

struct FitArgs {
  DatasetArgs data;
  SolverArgs solver;
  std::string out;
};

int run_fit(const FitArgs& args) {
  const ComparisonDataset ds = load(args.data);
  const SolverConfig config = solver_config(args.solver);
  require_outcomes(config.family, ds);
  const StepPlan plan = plan_steps(ds, config);
  print_config(std::cout, args.data, ds, config, plan);
  std::cout << std::flush;
  const RegularizationPath path = fit(ds, config);
  io::save_path(path, ds, args.out);
  io::write_file(args.out + ".ids.csv", io::id_map_csv(ds));
  std::cout << "snapshots = " << path.points.size() << "\n"
            << "support-events = " << path.events.size() << "\n"
            << "t-final = " << io::format_real(path.t_max()) << "\n";
  return 0;
}

// ---- cv ----

struct CvArgs {
  DatasetArgs data;
  SolverArgs solver;
  std::size_t folds = 5;
  std::string t_grid = "auto";
  std::size_t grid_points = 50;
  std::string split = "record";
  std::string out_report = "cv.csv";
  std::string out_state = "selected.json";
  std::string out_path;
};

int run_cv_cmd(const CvArgs& args) {
  const ComparisonDataset ds = load(args.data);
  const SolverConfig config = solver_config(args.solver);
  require_outcomes(config.family, ds);
  CvConfig cv;
  cv.folds = args.folds;
  cv.t_grid = parse_grid(args.t_grid);
  cv.grid_points = args.grid_points;
  cv.split_mode = parse_split(args.split);
  cv.seed = args.solver.seed;

  const StepPlan plan = plan_steps(ds, config);
  print_config(std::cout, args.data, ds, config, plan);
  std::cout << "folds = " << cv.folds << "\n"
            << "split = \"" << split_name(cv.split_mode) << "\"\n"
            << "t-grid = \"" << args.t_grid << "\"\n"
            << std::flush;

  const CvReport report = run_cv(ds, config, cv);
  io::write_file(args.out_report, io::cv_report_csv(report));

  // Selected model on the full data.
  RegularizationPath full;
  if (report.pilot) {
    full = *report.pilot;
  } else {
    SolverConfig full_config = config;
    full_config.t_max = report.t_cv;
    full = fit(ds, full_config);
  }
  const ModelState selected = interpolate_state(full, report.t_cv);
  io::save_state(selected, ds, args.out_state);
  if (!args.out_path.empty()) io::save_path(full, ds, args.out_path);

  std::cout << "t-cv = " << io::format_real(report.t_cv) << "\n"
            << "mean-error = " << io::format_real(report.mean_errors[report.t_cv_index])
            << "\n"
            << "tie-policy-applied = " << (report.tie_policy_applied ? "true" : "false")
            << "\n";
  return 0;
}

// ---- evaluate ----

struct EvaluateArgs {
  DatasetArgs data;
  std::string state;
  std::string path;
  std::optional<double> t;
  std::string test;
};

int run_evaluate(const EvaluateArgs& args) {
  const ComparisonDataset ds = load(args.data);
  ModelState state;
  if (!args.state.empty() == !args.path.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "give exactly one of --state and --path");
  }
  if (!args.state.empty()) {
    state = io::load_state(args.state, ds);
  } else {
    const RegularizationPath path = io::load_path(args.path, ds);
    state = interpolate_state(path, args.t.value_or(path.t_max()));
  }
  std::vector<ScoredRecord> records;
  if (args.test.empty()) {
    records = scored_records(ds);
  } else {
    DatasetArgs test_args{args.test, args.data.features};
    std::optional<fs::path> features;
    if (test_args.features != "identity") features = test_args.features;
    const ComparisonDataset test = io::load_dataset(test_args.comparisons, features);
    records = match_records(ds, test);
  }
  const double common = mismatch_ratio(state, ds.features(), records, false);
  const double personal = mismatch_ratio(state, ds.features(), records, true);
  std::cout << "common,personalized\n"
            << io::format_real(common) << "," << io::format_real(personal) << "\n";
  return 0;
}

// ---- export-path ----

struct ExportArgs {
  DatasetArgs data;
  std::string path;
  std::string kind = "coefficients";
  std::optional<double> t;
  std::size_t top = 10;
  std::vector<std::string> users;
  std::string out;
};

std::string user_label(const ComparisonDataset& ds, std::size_t u) {
  return ds.user_ids()[u];
}

std::string export_coefficients(const RegularizationPath& path,
                                const ComparisonDataset& ds) {
  std::string out = "t,k,block,user,index,value\n";
  for (const PathPoint& p : path.points) {
    const std::string prefix =
        io::format_real(p.state.t) + "," + std::to_string(p.iteration) + ",";
    for (std::size_t j = 0; j < p.state.dim; ++j) {
      out += prefix + "eta,," + std::to_string(j) + "," +
             io::format_real(p.state.eta[j]) + "\n";
    }
    for (std::size_t u = 0; u < p.state.n_users; ++u) {
      const auto xi = p.state.xi_of(u);
      for (std::size_t j = 0; j < p.state.dim; ++j) {
        if (xi[j] == 0.0) continue;
        out += prefix + "xi," + user_label(ds, u) + "," + std::to_string(j) + "," +
               io::format_real(xi[j]) + "\n";
      }
      if (p.state.gamma[u] != 0.0) {
        out += prefix + "gamma," + user_label(ds, u) + ",0," +
               io::format_real(p.state.gamma[u]) + "\n";
      }
    }
  }
  return out;
}

std::string export_events(const RegularizationPath& path, const ComparisonDataset& ds) {
  std::string out = "t,k,block,user,direction\n";
  for (const SupportEvent& e : path.events) {
    out += io::format_real(e.t) + "," + std::to_string(e.iteration) + "," +
           (e.block == BlockKind::kDeviation ? "deviation" : "bias") + "," +
           user_label(ds, e.user) + "," + (e.entered ? "entered" : "left") + "\n";
  }
  return out;
}

std::string export_deviation_ranking(const RegularizationPath& path,
                                     const ComparisonDataset& ds) {
  const auto first = first_entry_times(path, BlockKind::kDeviation);
  std::string out = "rank,user,first_entry_t\n";
  std::size_t rank = 0;
  for (std::size_t u : deviation_ranking(path)) {
    out += std::to_string(++rank) + "," + user_label(ds, u) + "," +
           (first[u] ? io::format_real(*first[u]) : "") + "\n";
  }
  return out;
}

std::string export_bias(const RegularizationPath& path, const ComparisonDataset& ds,
                        const ModelState& state, std::size_t top) {
  std::string out = "rank,user,gamma,left,right,first_entry_t\n";
  const auto rows = bias_report(state, ds, &path);
  for (std::size_t r = 0; r < rows.size() && r < top; ++r) {
    const BiasRow& row = rows[r];
    out += std::to_string(r + 1) + "," + user_label(ds, row.user) + "," +
           io::format_real(row.gamma) + "," + std::to_string(row.left_count) + "," +
           std::to_string(row.right_count) + "," +
           (row.first_entry ? io::format_real(*row.first_entry) : "") + "\n";
  }
  return out;
}

std::string export_ranks(const ComparisonDataset& ds, const ModelState& state,
                         const std::vector<std::string>& user_ids) {
  std::vector<std::size_t> users;
  for (const std::string& id : user_ids) {
    const auto& all = ds.user_ids();
    const auto it = std::lower_bound(all.begin(), all.end(), id);
    if (it == all.end() || *it != id) {
      throw Error(ErrorCode::kOutOfRange, "unknown user '" + id + "'");
    }
    users.push_back(static_cast<std::size_t>(it - all.begin()));
  }
  const auto ranks = rank_compare(compute_scores(state, ds.features()), users);
  std::string out = "row";
  for (const std::string& item : ds.item_ids()) out += "," + item;
  out += "\n";
  for (std::size_t r = 0; r < ranks.size(); ++r) {
    out += r == 0 ? std::string("common") : user_ids[r - 1];
    for (std::size_t v : ranks[r]) out += "," + std::to_string(v);
    out += "\n";
  }
  return out;
}

int run_export(const ExportArgs& args) {
  const ComparisonDataset ds = load(args.data);
  const RegularizationPath path = io::load_path(args.path, ds);
  const double t = args.t.value_or(path.t_max());
  std::string text;
  if (args.kind == "coefficients") {
    text = export_coefficients(path, ds);
  } else if (args.kind == "events") {
    text = export_events(path, ds);
  } else if (args.kind == "deviation-ranking") {
    text = export_deviation_ranking(path, ds);
  } else if (args.kind == "bias-report") {
    text = export_bias(path, ds, interpolate_state(path, t), args.top);
  } else {
    text = export_ranks(ds, interpolate_state(path, t), args.users);
  }
  if (args.out.empty()) {
    std::cout << text;
  } else {
    io::write_file(args.out, text);
  }
  return 0;
}

// ---- bench ----

struct BenchArgs {
  DatasetArgs data;
  SolverArgs solver;
  std::vector<std::size_t> threads_list = {1};
  std::size_t repeats = 20;
  std::size_t sim_users = 100;
  std::string out;
};

int run_bench(const BenchArgs& args) {
  ComparisonDataset ds;
  if (args.data.comparisons.empty()) {
    SimConfig sim;
    sim.n_users = args.sim_users;
    sim.seed = args.solver.seed;
    ds = generate(sim).dataset;
  } else {
    ds = load(args.data);
  }
  SolverConfig config = solver_config(args.solver);
  require_outcomes(config.family, ds);
  const StepPlan plan = plan_steps(ds, config);
  print_config(std::cerr, args.data, ds, config, plan);
  // The step is resolved once so every run does identical work.
  config.alpha = plan.alpha;

  std::string out = "M,mean_T,S\n";
  double t1 = 0.0;
  for (std::size_t m : args.threads_list) {
    config.threads = m;
    double total = 0.0;
    for (std::size_t r = 0; r < args.repeats; ++r) {
      const auto start = std::chrono::steady_clock::now();
      const RegularizationPath path = fit(ds, config);
      total += std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                   .count();
    }
    const double mean = total / static_cast<double>(args.repeats);
    if (m == args.threads_list.front()) t1 = mean;
    // Speedup relative to the first entry (M = 1 in the usual protocol).
    out += std::to_string(m) + "," + io::format_real(mean) + "," +
           io::format_real(t1 / mean) + "\n";
  }
  if (args.out.empty()) {
    std::cout << out;
  } else {
    io::write_file(args.out, out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixed-effects HodgeRank paths by Linearized Bregman Iterations"};
  app.set_config("--config", "", "TOML/INI file with the same keys as the flags");
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "generate a synthetic study");
  simulate->add_option("--items", sim.config.n_items)->capture_default_str();
  simulate->add_option("--dim", sim.config.dim)->capture_default_str();
  simulate->add_option("--users", sim.config.n_users)->capture_default_str();
  simulate->add_option("--p-common", sim.config.p_common_nonzero)->capture_default_str();
  simulate->add_option("--p-deviation", sim.config.p_dev_nonzero)->capture_default_str();
  simulate->add_option("--p-bias", sim.config.p_bias_nonzero)->capture_default_str();
  simulate->add_option("--bias-sd", sim.config.bias_sd)->capture_default_str();
  simulate->add_option("--n-min", sim.config.n_min)->capture_default_str();
  simulate->add_option("--n-max", sim.config.n_max)->capture_default_str();
  simulate->add_option("--family", sim.family, "linear, bt or tm")
      ->check(CLI::IsMember({"linear", "bt", "tm"}))
      ->capture_default_str();
  simulate->add_option("--seed", sim.config.seed)->capture_default_str();
  simulate->add_option("--out", sim.out, "output directory")->capture_default_str();

  FitArgs fit_args;
  auto* fit_cmd = app.add_subcommand("fit", "fit a regularization path");
  add_dataset_flags(fit_cmd, fit_args.data);
  add_solver_flags(fit_cmd, fit_args.solver);
  fit_cmd->add_option("--out", fit_args.out, "path file (JSON lines)")->required();

  CvArgs cv_args;
  auto* cv_cmd = app.add_subcommand("cv", "cross-validate the stopping time");
  add_dataset_flags(cv_cmd, cv_args.data);
  add_solver_flags(cv_cmd, cv_args.solver);
  cv_cmd->add_option("--folds", cv_args.folds)->capture_default_str();
  cv_cmd->add_option("--t-grid", cv_args.t_grid,
                     "'auto', a comma-separated list, or a file of values")
      ->capture_default_str();
  cv_cmd->add_option("--grid-points", cv_args.grid_points)->capture_default_str();
  cv_cmd->add_option("--split", cv_args.split, "record or item")
      ->check(CLI::IsMember({"record", "item"}))
      ->capture_default_str();
  cv_cmd->add_option("--out-report", cv_args.out_report)->capture_default_str();
  cv_cmd->add_option("--out-state", cv_args.out_state)->capture_default_str();
  cv_cmd->add_option("--out-path", cv_args.out_path, "also save the full-data path");

  EvaluateArgs eval_args;
  auto* eval_cmd = app.add_subcommand("evaluate", "mismatch ratio of a fitted model");
  add_dataset_flags(eval_cmd, eval_args.data);
  eval_cmd->add_option("--state", eval_args.state, "state file");
  eval_cmd->add_option("--path", eval_args.path, "path file");
  eval_cmd->add_option("--t", eval_args.t, "path time (default: end of path)");
  eval_cmd->add_option("--test", eval_args.test,
                       "test comparisons CSV (default: the training records)");

  ExportArgs export_args;
  auto* export_cmd = app.add_subcommand("export-path", "CSV reports from a path file");
  add_dataset_flags(export_cmd, export_args.data);
  export_cmd->add_option("--path", export_args.path)->required();
  export_cmd->add_option("--kind", export_args.kind)
      ->check(CLI::IsMember(
          {"coefficients", "events", "deviation-ranking", "bias-report", "ranks"}))
      ->capture_default_str();
  export_cmd->add_option("--t", export_args.t, "path time (default: end of path)");
  export_cmd->add_option("--top", export_args.top)->capture_default_str();
  export_cmd->add_option("--users", export_args.users, "user ids for --kind ranks")
      ->delimiter(',');
  export_cmd->add_option("--out", export_args.out, "output file (default: stdout)");

  BenchArgs bench_args;
  auto* bench_cmd = app.add_subcommand("bench", "time the solver over thread counts");
  bench_cmd->add_option("--comparisons", bench_args.data.comparisons,
                        "comparisons CSV (default: simulate)");
  bench_cmd->add_option("--features", bench_args.data.features)->capture_default_str();
  add_solver_flags(bench_cmd, bench_args.solver);
  bench_cmd->add_option("--threads-list", bench_args.threads_list)
      ->delimiter(',')
      ->capture_default_str();
  bench_cmd->add_option("--repeats", bench_args.repeats)
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench_cmd->add_option("--sim-users", bench_args.sim_users,
                        "users in the simulated workload")
      ->capture_default_str();
  bench_cmd->add_option("--out", bench_args.out, "CSV file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help exits 0; every other parse failure is a usage error.
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*simulate) return run_simulate(sim);
    if (*fit_cmd) return run_fit(fit_args);
    if (*cv_cmd) return run_cv_cmd(cv_args);
    if (*eval_cmd) return run_evaluate(eval_args);
    if (*export_cmd) return run_export(export_args);
    if (*bench_cmd) return run_bench(bench_args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
