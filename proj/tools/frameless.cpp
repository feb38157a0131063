// Command-line front end: analyze, simulate, optimize, profile. Numeric
// outputs are CSV tables plus a JSON summary carrying the run manifest
// (command, resolved configuration, seed, version, wall-clock duration).
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "frameless/analysis.hpp"
#include "frameless/model.hpp"
#include "frameless/optimizer.hpp"
#include "frameless/simulator.hpp"
#include "frameless/stats.hpp"
#include "frameless/version.hpp"

namespace {

using frameless::SlotClass;
using frameless::SystemConfig;
using json = nlohmann::ordered_json;

constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Comma-separated SLOTS:BETA pairs, e.g. "88:2.4,12:12.94".
std::vector<SlotClass> parse_classes(const std::string& text) {
  std::vector<SlotClass> classes;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos)
      throw UsageError("--classes: entry '" + item + "' is not of the form SLOTS:BETA");
    try {
      std::size_t used = 0;
      const int slots = std::stoi(item.substr(0, colon), &used);
      if (used != colon) throw std::invalid_argument("trailing text");
      const std::string beta_text = item.substr(colon + 1);
      const double beta = std::stod(beta_text, &used);
      if (used != beta_text.size()) throw std::invalid_argument("trailing text");
      classes.push_back(SlotClass{slots, beta});
    } catch (const std::exception&) {
      throw UsageError("--classes: entry '" + item + "' is not of the form SLOTS:BETA");
    }
  }
  if (classes.empty()) throw UsageError("--classes: at least one SLOTS:BETA pair is required");
  return classes;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw NumericError("cannot open output file " + path.string());
  out << content;
  if (!out) throw NumericError("failed writing output file " + path.string());
}

json classes_json(const SystemConfig& config) {
  json list = json::array();
  for (const auto& c : config.classes) list.push_back({{"slots", c.slot_count}, {"beta", c.mean_degree}});
  return list;
}

json base_manifest(const std::string& command, const SystemConfig& config) {
  json m;
  m["command"] = command;
  m["version"] = frameless::kVersion;
  m["users"] = config.users;
  m["classes"] = classes_json(config);
  m["total_slots"] = config.total_slots();
  return m;
}

std::uint64_t entropy_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeArgs {
  int users = 0;
  std::string classes;
  int slots = -1;  // optional cross-check against the class list
  int target = -1;
  double prune = 1e-15;
  double leak_limit = 1e-6;
  std::string output = ".";
};

SystemConfig make_config(int users, const std::string& class_spec, int declared_slots) {
  SystemConfig config;
  config.users = users;
  config.classes = parse_classes(class_spec);
  config.validate();
  if (declared_slots >= 0 && declared_slots != config.total_slots())
    throw UsageError("--slots: declared total " + std::to_string(declared_slots) +
                     " does not match the class list total " + std::to_string(config.total_slots()));
  return config;
}

int run_analyze(const AnalyzeArgs& args) {
  const SystemConfig config = make_config(args.users, args.classes, args.slots);
  if (args.target >= 0 && args.target > config.users)
    throw UsageError("--target: exceeds the number of users");
  Timer timer;
  const frameless::ReliabilityProfile profile =
      frameless::unresolved_pmf(config, frameless::AnalysisOptions{args.prune});

  std::string csv = "u,P_u,F_{n-u}\n";
  double cum = 0.0;
  for (int u = 0; u <= config.users; ++u) {
    cum += profile.pmf[u];
    csv += std::to_string(u) + "," + format_double(profile.pmf[u]) + "," + format_double(cum) + "\n";
  }

  json summary = base_manifest("analyze", config);
  summary["prune_threshold"] = args.prune;
  summary["leak_limit"] = args.leak_limit;
  summary["leaked_mass"] = profile.leaked_mass;
  summary["expected_per"] = profile.expected_per;
  summary["throughput"] = profile.throughput;
  summary["throughput_defined"] = profile.throughput_defined;
  summary["expected_resolved"] = profile.expected_resolved();
  if (args.target >= 0) {
    summary["target"] = args.target;
    summary["f_target"] = profile.reliability[args.target];
  }
  summary["duration_seconds"] = timer.seconds();

  const std::filesystem::path dir(args.output);
  std::filesystem::create_directories(dir);
  write_file(dir / "pmf.csv", csv);
  write_file(dir / "analyze.json", summary.dump(2) + "\n");

  if (args.target >= 0)
    std::cout << "F_" << args.target << " = " << format_double(profile.reliability[args.target]) << "\n";
  std::cout << "expected PER = " << format_double(profile.expected_per) << "\n"
            << "throughput = " << format_double(profile.throughput)
            << (profile.throughput_defined ? "" : " (undefined: no slots)") << "\n"
            << "leaked mass = " << format_double(profile.leaked_mass) << "\n"
            << "wrote " << (dir / "pmf.csv").string() << ", " << (dir / "analyze.json").string()
            << "\n";

  if (profile.leaked_mass > args.leak_limit)
    throw NumericError("leaked mass " + format_double(profile.leaked_mass) +
                       " exceeds --leak-limit " + format_double(args.leak_limit));
  return 0;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  int users = 0;
  std::string classes;
  int slots = -1;
  std::uint64_t trials = 0;
  std::optional<std::uint64_t> seed;
  double adaptive_beta_star = 0.0;  // > 0 switches to the adaptive scheme
  double confidence = 0.997;
  int jobs = 1;
  std::string output = ".";
};

std::string empirical_csv(int users, std::uint64_t trials,
                          const std::vector<std::uint64_t>& counts, double confidence) {
  std::string csv = "u,count,P_u,se,ci_lo,ci_hi,F_{n-u}\n";
  std::uint64_t cum = 0;
  for (int u = 0; u <= users; ++u) {
    const std::uint64_t c = counts[u];
    cum += c;
    const auto ci = frameless::clopper_pearson(c, trials, confidence);
    csv += std::to_string(u) + "," + std::to_string(c) + "," +
           format_double(static_cast<double>(c) / trials) + "," +
           format_double(frameless::binomial_std_error(c, trials)) + "," + format_double(ci.lo) +
           "," + format_double(ci.hi) + "," +
           format_double(static_cast<double>(cum) / trials) + "\n";
  }
  return csv;
}

int run_simulate(const SimulateArgs& args) {
  const bool adaptive = args.adaptive_beta_star > 0.0;
  const std::uint64_t seed = args.seed.value_or(entropy_seed());
  Timer timer;

  json summary;
  std::string csv;
  if (adaptive) {
    if (!args.classes.empty())
      throw UsageError("--classes: not allowed with --adaptive (single-class scheme)");
    if (args.slots < 0) throw UsageError("--slots: required with --adaptive");
    const auto result = frameless::run_adaptive(args.users, args.slots, args.adaptive_beta_star,
                                                args.trials, seed, args.jobs);
    SystemConfig shape;
    shape.users = args.users;
    shape.classes = {SlotClass{args.slots, 0.0}};  // beta varies per slot
    summary = base_manifest("simulate", shape);
    summary["mode"] = "adaptive";
    summary["beta_star"] = args.adaptive_beta_star;
    summary["failure_rate"] = result.failure_rate();
    summary["failure_count"] = result.failure_count;
    summary["f_full"] = result.reliability_hat()[args.users];
    csv = empirical_csv(args.users, args.trials, result.unresolved_counts, args.confidence);
    std::cout << "failure rate = " << format_double(result.failure_rate()) << " ("
              << result.failure_count << "/" << args.trials << " periods)\n";
  } else {
    if (args.classes.empty()) throw UsageError("--classes: required (or use --adaptive)");
    const SystemConfig config = make_config(args.users, args.classes, args.slots);
    const auto result = frameless::run_trials(config, args.trials, seed, args.jobs);
    summary = base_manifest("simulate", config);
    summary["mode"] = "static";
    csv = empirical_csv(args.users, args.trials, result.unresolved_counts, args.confidence);
    std::cout << "P(all resolved) = " << format_double(result.reliability_hat()[args.users]) << "\n";
  }
  summary["trials"] = args.trials;
  summary["seed"] = seed;
  summary["confidence"] = args.confidence;
  summary["jobs"] = args.jobs;
  summary["duration_seconds"] = timer.seconds();

  const std::filesystem::path dir(args.output);
  std::filesystem::create_directories(dir);
  write_file(dir / "empirical_pmf.csv", csv);
  write_file(dir / "simulate.json", summary.dump(2) + "\n");
  std::cout << "seed = " << seed << "\n"
            << "wrote " << (dir / "empirical_pmf.csv").string() << ", "
            << (dir / "simulate.json").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// optimize

struct OptimizeArgs {
  int users = 0;
  int slots = 0;
  int class_count = 1;
  int target = 0;
  int starts = 8;
  std::uint64_t seed = 1;
  int budget = 400;
  double tol_x = 1e-4;
  double tol_f = 1e-6;
  double search_prune = 1e-13;
  double final_prune = 1e-15;
  int jobs = 1;
  std::string output = ".";
};

std::string classes_text(const SystemConfig& config, char sep) {
  std::string text;
  for (int h = 0; h < config.class_count(); ++h) {
    if (h) text += sep;
    text += std::to_string(config.classes[h].slot_count) + ":" +
            format_double(config.classes[h].mean_degree);
  }
  return text;
}

int run_optimize(const OptimizeArgs& args) {
  frameless::OptimizationProblem problem;
  problem.users = args.users;
  problem.total_slots = args.slots;
  problem.class_count = args.class_count;
  problem.target = args.target;
  problem.starts = args.starts;
  problem.seed = args.seed;
  problem.max_evals_per_start = args.budget;
  problem.tol_x = args.tol_x;
  problem.tol_f = args.tol_f;
  problem.search_prune = args.search_prune;
  problem.final_prune = args.final_prune;
  problem.jobs = args.jobs;
  try {
    problem.validate();
  } catch (const std::domain_error& e) {
    throw UsageError(e.what());
  }

  Timer timer;
  const auto result = frameless::multistart_optimize(problem);

  std::string csv = "start,converged,evals,F_t,classes\n";
  for (const auto& r : result.starts)
    csv += std::to_string(r.index) + "," + std::to_string(r.converged ? 1 : 0) + "," +
           std::to_string(r.evals) + "," + format_double(r.best_reliability) + "," +
           classes_text(r.best_config, ';') + "\n";

  json summary = base_manifest("optimize", result.best_config);
  summary["target"] = args.target;
  summary["starts"] = args.starts;
  summary["seed"] = args.seed;
  summary["budget_per_start"] = args.budget;
  summary["jobs"] = args.jobs;
  summary["best_start"] = result.best_start;
  summary["best_f"] = result.best_reliability;
  summary["best_f_search"] = result.best_reliability_search;
  summary["leaked_mass"] = result.leaked_mass;
  summary["total_evals"] = result.total_evals;
  summary["duration_seconds"] = timer.seconds();

  const std::filesystem::path dir(args.output);
  std::filesystem::create_directories(dir);
  write_file(dir / "optimize_starts.csv", csv);
  write_file(dir / "optimize.json", summary.dump(2) + "\n");

  std::cout << "best F_" << args.target << " = " << format_double(result.best_reliability)
            << " at " << classes_text(result.best_config, ',') << " (start " << result.best_start
            << ", " << result.total_evals << " evaluations)\n"
            << "wrote " << (dir / "optimize_starts.csv").string() << ", "
            << (dir / "optimize.json").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// profile

struct ProfileArgs {
  int users = 0;
  std::string classes;
  std::string order = "batched";
  double prune = 1e-15;
  double leak_limit = 1e-6;
  std::string output = ".";
};

std::vector<int> parse_order(const std::string& text, const SystemConfig& config) {
  if (text == "batched") return frameless::batched_slot_order(config);
  std::vector<int> order;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      const int cls = std::stoi(item);
      if (cls < 1 || cls > config.class_count()) throw std::out_of_range("class index");
      order.push_back(cls - 1);
    } catch (const std::exception&) {
      throw UsageError("--order: '" + item + "' is not a class index in [1, " +
                       std::to_string(config.class_count()) + "]");
    }
  }
  return order;
}

int run_profile(const ProfileArgs& args) {
  const SystemConfig config = make_config(args.users, args.classes, -1);
  const std::vector<int> order = parse_order(args.order, config);
  Timer timer;
  std::vector<double> resolved;
  try {
    resolved = frameless::intermediate_profile(config, order, frameless::AnalysisOptions{args.prune});
  } catch (const std::domain_error& e) {
    throw UsageError(e.what());
  }

  std::string csv = "slot,n_r\n";
  for (std::size_t l = 0; l < resolved.size(); ++l)
    csv += std::to_string(l) + "," + format_double(resolved[l]) + "\n";

  json summary = base_manifest("profile", config);
  summary["order"] = args.order;
  summary["prune_threshold"] = args.prune;
  summary["final_resolved"] = resolved.back();
  summary["duration_seconds"] = timer.seconds();

  const std::filesystem::path dir(args.output);
  std::filesystem::create_directories(dir);
  write_file(dir / "profile.csv", csv);
  write_file(dir / "profile.json", summary.dump(2) + "\n");
  std::cout << "final n_r = " << format_double(resolved.back()) << "\n"
            << "wrote " << (dir / "profile.csv").string() << ", " << (dir / "profile.json").string()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-length reliability analysis, simulation and parameter optimization "
               "for frameless ALOHA with successive interference cancellation"};
  app.set_version_flag("--version", frameless::kVersion);
  app.set_config("--config", "", "Read options from an INI-style key=value file");
  app.require_subcommand(1);

  AnalyzeArgs analyze_args;
  auto* analyze = app.add_subcommand("analyze", "Exact pmf of unresolved users and reliability table");
  analyze->add_option("-n,--users", analyze_args.users, "Number of contending users")->required();
  analyze->add_option("-c,--classes", analyze_args.classes, "Slot classes as SLOTS:BETA,...")->required();
  analyze->add_option("-m,--slots", analyze_args.slots, "Total slots (cross-checked against --classes)");
  analyze->add_option("-t,--target", analyze_args.target, "Target resolved users t for the headline F_t");
  analyze->add_option("--prune", analyze_args.prune, "State pruning threshold")->capture_default_str();
  analyze->add_option("--leak-limit", analyze_args.leak_limit, "Max tolerated leaked mass")
      ->capture_default_str();
  analyze->add_option("-o,--output", analyze_args.output, "Output directory")
      ->envname("FRAMELESS_OUTDIR")
      ->capture_default_str();

  SimulateArgs simulate_args;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo contention periods");
  simulate->add_option("-n,--users", simulate_args.users, "Number of contending users")->required();
  simulate->add_option("-c,--classes", simulate_args.classes, "Slot classes as SLOTS:BETA,...");
  simulate->add_option("-m,--slots", simulate_args.slots, "Total slots");
  simulate->add_option("--trials", simulate_args.trials, "Number of contention periods")
      ->required()
      ->check(CLI::Range(std::uint64_t{1}, std::uint64_t{1} << 40));
  simulate->add_option("--seed", simulate_args.seed, "Master seed (default: from entropy)");
  simulate->add_option("--adaptive", simulate_args.adaptive_beta_star,
                       "Run the adaptive scheme with the given beta*");
  simulate->add_option("--confidence", simulate_args.confidence, "Confidence level for the CIs")
      ->capture_default_str();
  simulate->add_option("-j,--jobs", simulate_args.jobs, "Worker threads")->capture_default_str();
  simulate->add_option("-o,--output", simulate_args.output, "Output directory")
      ->envname("FRAMELESS_OUTDIR")
      ->capture_default_str();

  OptimizeArgs optimize_args;
  auto* optimize = app.add_subcommand("optimize", "Maximize F_t over slot counts and degrees");
  optimize->add_option("-n,--users", optimize_args.users, "Number of contending users")->required();
  optimize->add_option("-m,--slots", optimize_args.slots, "Total slots")->required();
  optimize->add_option("-k,--k", optimize_args.class_count, "Number of slot classes")
      ->capture_default_str();
  optimize->add_option("-t,--target", optimize_args.target, "Target resolved users t")->required();
  optimize->add_option("--starts", optimize_args.starts, "Multi-start count")->capture_default_str();
  optimize->add_option("--seed", optimize_args.seed, "Master seed for start points")
      ->capture_default_str();
  optimize->add_option("--budget", optimize_args.budget, "Objective evaluations per start")
      ->capture_default_str();
  optimize->add_option("--tolx", optimize_args.tol_x, "Simplex diameter tolerance")->capture_default_str();
  optimize->add_option("--tolf", optimize_args.tol_f, "Objective spread tolerance")->capture_default_str();
  optimize->add_option("--search-prune", optimize_args.search_prune, "Pruning threshold while searching")
      ->capture_default_str();
  optimize->add_option("--final-prune", optimize_args.final_prune, "Pruning threshold for the winner")
      ->capture_default_str();
  optimize->add_option("-j,--jobs", optimize_args.jobs, "Concurrent starts")->capture_default_str();
  optimize->add_option("-o,--output", optimize_args.output, "Output directory")
      ->envname("FRAMELESS_OUTDIR")
      ->capture_default_str();

  ProfileArgs profile_args;
  auto* profile = app.add_subcommand("profile", "Mean resolved users after each slot prefix");
  profile->add_option("-n,--users", profile_args.users, "Number of contending users")->required();
  profile->add_option("-c,--classes", profile_args.classes, "Slot classes as SLOTS:BETA,...")->required();
  profile->add_option("--order", profile_args.order,
                      "Slot order: 'batched' or a comma list of 1-based class indices")
      ->capture_default_str();
  profile->add_option("--prune", profile_args.prune, "State pruning threshold")->capture_default_str();
  profile->add_option("-o,--output", profile_args.output, "Output directory")
      ->envname("FRAMELESS_OUTDIR")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) return app.exit(e);
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (app.got_subcommand(analyze)) return run_analyze(analyze_args);
    if (app.got_subcommand(simulate)) return run_simulate(simulate_args);
    if (app.got_subcommand(optimize)) return run_optimize(optimize_args);
    if (app.got_subcommand(profile)) return run_profile(profile_args);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "internal failure: " << e.what() << "\n";
    return kExitNumeric;
  }
  return 0;
}
