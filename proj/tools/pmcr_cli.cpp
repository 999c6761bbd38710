// Command-line front end: `test` runs one test on a CSV file, `simulate` runs a Monte-Carlo campaign.

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pmcr/pmcr.hpp"

namespace {

using namespace pmcr;

constexpr int kAccept = 0;
constexpr int kFailure = 1;
constexpr int kReject = 2;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

TestMode parse_mode(const std::string& s) {
  if (s == "continuous-single") return TestMode::continuous_single;
  if (s == "continuous-two-proxy") return TestMode::continuous_two_proxy;
  if (s == "discrete") return TestMode::discrete;
  throw Error(ErrorCode::invalid_config, "unknown mode '" + s + "'");
}

Basis parse_basis(const std::string& s) {
  if (s == "complex_exp") return Basis::complex_exp;
  if (s == "sin") return Basis::sin;
  if (s == "cos") return Basis::cos;
  if (s == "identity") return Basis::identity;
  if (s == "indicator") return Basis::indicator;
  throw Error(ErrorCode::invalid_config, "unknown basis '" + s + "'");
}

BootstrapScheme parse_scheme(const std::string& s) {
  if (s == "refit") return BootstrapScheme::refit;
  if (s == "residual") return BootstrapScheme::residual;
  throw Error(ErrorCode::invalid_config, "unknown bootstrap scheme '" + s + "'");
}

struct CommonOptions {
  int K = 100;
  double t_max = TestConfig{}.t_max;
  double sigma_s = 1.0;
  std::optional<double> lambda;
  double lambda_scale = TestConfig{}.lambda_scale;
  int folds = 5;
  int B = 500;
  double alpha = 0.05;
  std::string scheme = "refit";
  int threads = 0;

  void add_to(CLI::App& app) {
    app.add_option("--K", K, "number of t-grid points")->capture_default_str();
    app.add_option("--t-max", t_max, "largest t-grid point")->capture_default_str();
    app.add_option("--sigma-s", sigma_s, "scale of the Gaussian weight measure")->capture_default_str();
    app.add_option("--lambda", lambda, "fixed regularization (cross-validated when absent)");
    app.add_option("--lambda-scale", lambda_scale, "factor applied to the cross-validated lambda")
        ->capture_default_str();
    app.add_option("--folds", folds, "cross-validation folds")->capture_default_str();
    app.add_option("--B", B, "bootstrap replications")->capture_default_str();
    app.add_option("--alpha", alpha, "significance level")->capture_default_str();
    app.add_option("--scheme", scheme, "bootstrap scheme: refit or residual")->capture_default_str();
    app.add_option("--threads", threads, "worker threads (default: PMCR_THREADS or all cores)");
  }

  TestConfig config() const {
    TestConfig cfg;
    cfg.K = K;
    cfg.t_max = t_max;
    cfg.measure.scale = sigma_s;
    cfg.lambda = lambda;
    cfg.lambda_scale = lambda_scale;
    cfg.cv.folds = folds;
    cfg.bootstrap.replications = B;
    cfg.bootstrap.alpha = alpha;
    cfg.bootstrap.scheme = parse_scheme(scheme);
    cfg.threads = resolve_threads(threads);
    return cfg;
  }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io_error, "cannot write '" + path + "'");
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Proxy-based causal null-hypothesis tests"};
  app.require_subcommand(1);

  // test
  auto* test = app.add_subcommand("test", "test H0: X independent of Y given the latent U on one CSV file");
  InputSpec input;
  std::string covariates, categorical, delimiter = ",", mode = "continuous-single", basis = "complex_exp", out_path;
  bool no_header = false, boot_stats = false;
  std::uint64_t seed = 0;
  CommonOptions test_opts;
  test->add_option("--input", input.path, "CSV file")->required();
  test->add_option("--x", input.x, "exposure column")->required();
  test->add_option("--y", input.y, "outcome column")->required();
  test->add_option("--w", input.w, "negative control outcome column")->required();
  test->add_option("--z", input.z, "negative control exposure column (two-proxy mode)");
  test->add_option("--covariates", covariates, "comma-separated observed covariate columns");
  test->add_option("--categorical", categorical, "comma-separated categorical columns (default in discrete mode: x,y,w)");
  test->add_option("--delimiter", delimiter, "field delimiter")->capture_default_str();
  test->add_flag("--no-header", no_header, "first line holds data");
  test->add_option("--mode", mode, "continuous-single, continuous-two-proxy or discrete")->capture_default_str();
  test->add_option("--basis", basis, "complex_exp, sin, cos, identity or indicator")->capture_default_str();
  test->add_option("--seed", seed, "bootstrap and cross-validation seed")->capture_default_str();
  test->add_option("--out", out_path, "write the JSON report here instead of standard output");
  test->add_flag("--boot-stats", boot_stats, "include the sorted bootstrap statistics");
  test_opts.add_to(*test);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo rejection rates for a built-in scenario");
  std::string scenario, n_list = "500", gamma_list, sim_mode = "single", out_json, out_csv;
  int reps = 100, meta_reps = 1;
  std::uint64_t master_seed = 0;
  CommonOptions sim_opts;
  sim_opts.B = 200;
  simulate->add_option("--scenario", scenario, "scenario id")->required();
  simulate->add_option("--n", n_list, "comma-separated sample sizes")->capture_default_str();
  simulate->add_option("--reps", reps, "replications per sample size")->capture_default_str();
  simulate->add_option("--meta-reps", meta_reps, "independent repetitions of the replication batch")->capture_default_str();
  simulate->add_option("--seed", master_seed, "master seed")->capture_default_str();
  simulate->add_option("--gamma-w", gamma_list, "comma-separated gamma_W values (example1)");
  simulate->add_option("--mode", sim_mode, "single, two (two-proxy), pmcr or mmr")->capture_default_str();
  simulate->add_option("--out-json", out_json, "JSON report path (default <scenario>.json)");
  simulate->add_option("--out-csv", out_csv, "CSV report path (default <scenario>.csv)");
  sim_opts.add_to(*simulate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kFailure;
  }

  try {
    if (test->parsed()) {
      if (delimiter.size() != 1) throw Error(ErrorCode::invalid_config, "delimiter must be one character");
      input.delimiter = delimiter[0];
      input.header = !no_header;
      input.covariates = split_list(covariates);
      TestConfig cfg = test_opts.config();
      cfg.mode = parse_mode(mode);
      cfg.basis = parse_basis(basis);
      cfg.bootstrap.seed = seed;
      for (const auto& c : split_list(categorical)) input.categorical.insert(c);
      if (cfg.mode == TestMode::discrete && input.categorical.empty()) input.categorical = {input.x, input.y, input.w};
      const Dataset data = load_dataset(input);
      if (data.size() < 10) {
        throw Error(ErrorCode::insufficient_data, "sample size " + std::to_string(data.size()) + " is below the minimum of 10");
      }
      const TestReport report = run_test(data, cfg);
      const std::string json = to_json(report, boot_stats).dump(2) + "\n";
      if (out_path.empty()) {
        std::cout << json;
      } else {
        write_text(out_path, json);
      }
      return report.reject ? kReject : kAccept;
    }

    TestConfig cfg = sim_opts.config();
    SimulationConfig sim;
    for (const auto& s : split_list(n_list)) sim.n_values.push_back(std::stol(s));
    sim.reps = reps;
    sim.meta_reps = meta_reps;
    sim.master_seed = master_seed;
    sim.threads = cfg.threads;
    sim.validate();
    if (sim_mode != "single" && sim_mode != "two" && sim_mode != "pmcr" && sim_mode != "mmr") {
      throw Error(ErrorCode::invalid_config, "unknown simulate mode '" + sim_mode + "'");
    }
    std::vector<double> gammas;
    for (const auto& g : split_list(gamma_list)) gammas.push_back(std::stod(g));
    if (gammas.empty()) gammas.push_back(ScenarioOptions{}.gamma_w);

    nlohmann::ordered_json runs = nlohmann::ordered_json::array();
    std::ostringstream csv;
    bool first = true;
    std::cout << std::left << std::setw(36) << "scenario" << std::setw(8) << "n" << std::setw(10) << "rate"
              << "wilson 95%\n";
    for (double g : gammas) {
      ScenarioOptions opt;
      opt.gamma_w = g;
      opt.two_proxy = sim_mode == "two";
      opt.mmr = sim_mode == "mmr";
      Scenario s = make_scenario(scenario, opt);
      if (gammas.size() > 1 || !gamma_list.empty()) {
        std::ostringstream label;
        label << scenario << "(gamma_w=" << g << ")";
        s.id = label.str();
      }
      const SimulationReport report = run_simulation(s, sim, cfg);
      runs.push_back(to_json(report));
      std::ostringstream part;
      write_csv(part, report);
      std::string text = part.str();
      if (!first) text = text.substr(text.find('\n') + 1);
      csv << text;
      first = false;
      for (const auto& c : report.cells) {
        std::ostringstream rate, ci;
        rate << std::fixed << std::setprecision(3) << c.rate;
        ci << std::fixed << std::setprecision(3) << "[" << c.wilson.lower << ", " << c.wilson.upper << "]";
        std::cout << std::setw(36) << s.id << std::setw(8) << c.n << std::setw(10) << rate.str() << ci.str() << "\n";
      }
    }
    nlohmann::ordered_json doc;
    doc["version"] = kVersion;
    doc["runs"] = std::move(runs);
    write_text(out_json.empty() ? scenario + ".json" : out_json, doc.dump(2) + "\n");
    write_text(out_csv.empty() ? scenario + ".csv" : out_csv, csv.str());
    return kAccept;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}
