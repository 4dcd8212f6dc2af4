#include "gaussbp_cli/cli.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "CLI11.hpp"
#include "gaussbp/error.hpp"
#include "gaussbp/generate.hpp"
#include "gaussbp/io.hpp"
#include "gaussbp/oracle.hpp"
#include "gaussbp_cli/runner.hpp"
#include "json.hpp"

namespace gaussbp::cli {
namespace {

using json = nlohmann::ordered_json;

void diagnose(std::ostream& err, std::string_view code, const std::string& message) {
  err << json{{"error", code}, {"message", message}}.dump() << '\n';
}

int exit_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::NonConvergence:
    case ErrorCode::CavityGraphNotConverged:
      return kNotConverged;
    default:
      return kInputError;
  }
}

struct ScheduleFlags {
  double tol = 1e-10;
  int max_iters = 10000;
  double damping = 0.0;
  std::uint64_t seed = 0;
  std::string sweep = "sequential";
  unsigned jobs = 1;

  void add(CLI::App* app, const char* tol_flag) {
    app->add_option(tol_flag, tol, "Residual tolerance of the fixed-point solvers")
        ->capture_default_str();
    app->add_option("--max-iters", max_iters, "Sweep cap")->capture_default_str();
    app->add_option("--damping", damping, "Message damping in [0, 1)")->capture_default_str();
    app->add_option("--seed", seed, "Seed of random sweep orders and generated families")
        ->capture_default_str();
    app->add_option("--sweep", sweep, "Update order")
        ->check(CLI::IsMember({"sequential", "random"}))
        ->capture_default_str();
    app->add_option("--jobs", jobs, "Threads for independent cavity runs")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  }

  Schedule schedule() const {
    Schedule s;
    s.tol = tol;
    s.max_iters = max_iters;
    s.damping = damping;
    s.seed = seed;
    s.order = sweep == "random" ? SweepOrder::random_permutation : SweepOrder::sequential_fixed;
    return s;
  }
};

struct AlgorithmFlags {
  std::string estimate_a;
  std::string order = "id";

  void add(CLI::App* app) {
    app->add_option("--estimate-A", estimate_a,
                    "Cavity covariances: response, exact-oracle, zero or file:<path>");
    app->add_option("--order", order, "Growth order for covariance_grow")
        ->check(CLI::IsMember({"id", "degree"}))
        ->capture_default_str();
  }

  RunOptions options(Algorithm algorithm, const ScheduleFlags& flags) const {
    RunOptions o;
    o.algorithm = algorithm;
    o.schedule = flags.schedule();
    o.jobs = flags.jobs;
    o.estimate_a = estimate_a;
    o.order = order == "degree" ? GrowthOrder::degree : GrowthOrder::id;
    return o;
  }
};

Algorithm algorithm_or_throw(const std::string& name) {
  const auto a = parse_algorithm(name);
  if (!a) throw Error(ErrorCode::InvalidArgument, "unknown algorithm \"" + name + "\"");
  return *a;
}

// ---- compare -------------------------------------------------------------

struct Row {
  std::string algorithm;
  std::string quantity;
  double max_abs = 0.0;
  double mean_abs = 0.0;
  double max_rel = 0.0;
  double mean_rel = 0.0;
  bool pass = true;
};

Row error_row(const std::string& algorithm, const std::string& quantity,
              const std::vector<double>& got, const std::vector<double>& want, double tol) {
  Row row{algorithm, quantity};
  for (std::size_t k = 0; k < got.size(); ++k) {
    double abs_err = std::abs(got[k] - want[k]);
    if (std::isnan(abs_err)) abs_err = std::numeric_limits<double>::infinity();
    const double rel_err = abs_err / std::max(std::abs(want[k]), std::numeric_limits<double>::min());
    row.max_abs = std::max(row.max_abs, abs_err);
    row.max_rel = std::max(row.max_rel, rel_err);
    row.mean_abs += abs_err;
    row.mean_rel += rel_err;
  }
  if (!got.empty()) {
    row.mean_abs /= static_cast<double>(got.size());
    row.mean_rel /= static_cast<double>(got.size());
  }
  row.pass = row.max_abs <= tol;
  return row;
}

void append_rows(std::vector<Row>& rows, const RunResult& r, const ExactSolution& oracle,
                 const GaussianModel& g, double tol) {
  if (r.ids != g.ids()) {
    throw Error(ErrorCode::ShapeMismatch, "result for " + r.algorithm + " does not match the model");
  }
  const Eigen::VectorXd var = oracle.variances();
  rows.push_back(error_row(r.algorithm, "mean", r.means,
                           {oracle.means.data(), oracle.means.data() + oracle.means.size()}, tol));
  rows.push_back(error_row(r.algorithm, "variance", r.variances,
                           {var.data(), var.data() + var.size()}, tol));
  if (r.covariance) {
    const Eigen::MatrixXd& c = *r.covariance;
    rows.push_back(error_row(r.algorithm, "covariance", {c.data(), c.data() + c.size()},
                             {oracle.covariance.data(),
                              oracle.covariance.data() + oracle.covariance.size()},
                             tol));
  }
}

std::string format_number(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << std::scientific << v;
  return os.str();
}

void print_rows(std::ostream& out, const std::vector<Row>& rows, double tol, bool as_json) {
  if (as_json) {
    json list = json::array();
    for (const Row& r : rows) {
      auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
      list.push_back({{"algorithm", r.algorithm}, {"quantity", r.quantity},
                      {"max_abs", num(r.max_abs)}, {"mean_abs", num(r.mean_abs)},
                      {"max_rel", num(r.max_rel)}, {"mean_rel", num(r.mean_rel)},
                      {"tol", tol}, {"verdict", r.pass ? "pass" : "fail"}});
    }
    out << list.dump(2) << '\n';
    return;
  }
  out << "algorithm,quantity,max_abs,mean_abs,max_rel,mean_rel,tol,verdict\n";
  for (const Row& r : rows) {
    out << r.algorithm << ',' << r.quantity << ',' << format_number(r.max_abs) << ','
        << format_number(r.mean_abs) << ',' << format_number(r.max_rel) << ','
        << format_number(r.mean_rel) << ',' << format_number(tol) << ','
        << (r.pass ? "pass" : "fail") << '\n';
  }
}

ExactSolution oracle_for(const PerturbedModel& model) {
  if (model.is_gaussian()) return exact_gaussian(model.base());
  return exact_perturbed(model);
}

// ---- bench ---------------------------------------------------------------

double max_error(const RunResult& r, const ExactSolution& oracle) {
  double worst = 0.0;
  for (std::size_t k = 0; k < r.means.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    worst = std::max({worst, std::abs(r.means[k] - oracle.means(kk)),
                      std::abs(r.variances[k] - oracle.covariance(kk, kk))});
  }
  if (r.covariance) {
    worst = std::max(worst, (*r.covariance - oracle.covariance).cwiseAbs().maxCoeff());
  }
  return std::isnan(worst) ? std::numeric_limits<double>::infinity() : worst;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gaussian belief propagation with loop corrections, covariance recovery "
               "and expectation propagation",
               "gaussbp"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Write a model file");
  std::string kind_name = "chain";
  std::size_t n = 10;
  double coupling = 0.3;
  std::uint64_t gen_seed = 0;
  std::string output;
  gen->add_option("--kind", kind_name, "chain, cycle, grid, tree or random_dominant")
      ->capture_default_str();
  gen->add_option("--n", n, "Number of nodes")->capture_default_str();
  gen->add_option("--coupling", coupling, "Coupling strength")->capture_default_str();
  gen->add_option("--seed", gen_seed, "Random seed")->capture_default_str();
  gen->add_option("-o,--output", output, "Output path (default: standard output)");

  // run
  auto* run = app.add_subcommand("run", "Run one algorithm and print a result JSON");
  std::string model_path;
  std::string algorithm_name = "gabp";
  ScheduleFlags run_flags;
  AlgorithmFlags run_alg;
  run->add_option("model", model_path, "Model file")->required();
  run->add_option("-a,--algorithm", algorithm_name,
                  "gabp, lcbp, lc_variance, covariance_grow, covariance_cavity, ep_full, "
                  "ep_lc or ep_alt")
      ->capture_default_str();
  run_flags.add(run, "--tol");
  run_alg.add(run);

  // compare
  auto* cmp = app.add_subcommand("compare", "Compare results with the exact oracle");
  std::string cmp_model;
  std::vector<std::string> cmp_results;
  std::vector<std::string> cmp_algorithms;
  double cmp_tol = 1e-8;
  std::string cmp_format = "csv";
  ScheduleFlags cmp_flags;
  cmp_flags.tol = 1e-12;
  AlgorithmFlags cmp_alg;
  cmp->add_option("model", cmp_model, "Model file")->required();
  cmp->add_option("--result", cmp_results, "Result JSON files from `run`");
  cmp->add_option("--algorithms", cmp_algorithms, "Algorithms to run and compare")
      ->delimiter(',');
  cmp->add_option("--tol", cmp_tol, "Largest accepted absolute error")->capture_default_str();
  cmp->add_option("--format", cmp_format, "Table format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  cmp_flags.add(cmp, "--bp-tol");
  cmp_alg.add(cmp);

  // bench
  auto* bench = app.add_subcommand("bench", "Time algorithms on a generated model family");
  std::string family = "chain";
  std::vector<std::size_t> sizes{10, 50, 100};
  std::vector<std::string> bench_algorithms{"gabp"};
  int repetitions = 3;
  double bench_coupling = 0.3;
  ScheduleFlags bench_flags;
  AlgorithmFlags bench_alg;
  bench->add_option("--family", family, "Model kind")->capture_default_str();
  bench->add_option("--sizes", sizes, "Model sizes")->delimiter(',');
  bench->add_option("--algorithms", bench_algorithms, "Algorithms")->delimiter(',');
  bench->add_option("--repetitions", repetitions, "Timed runs per row")->capture_default_str();
  bench->add_option("--coupling", bench_coupling, "Coupling strength")->capture_default_str();
  bench_flags.add(bench, "--tol");
  bench_alg.add(bench);

  // validate
  auto* val = app.add_subcommand("validate", "Check a model file");
  std::string val_model;
  val->add_option("model", val_model, "Model file")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*gen) {
      const auto kind = parse_model_kind(kind_name);
      if (!kind) throw Error(ErrorCode::InvalidArgument, "unknown kind \"" + kind_name + "\"");
      const std::string text =
          model_to_json(PerturbedModel(generate_model({*kind, n, coupling, gen_seed})));
      if (output.empty()) {
        out << text;
      } else {
        write_text_file(output, text);
      }
      return kOk;
    }

    if (*run) {
      const PerturbedModel model = read_model_file(model_path);
      const RunResult result =
          execute(model, run_alg.options(algorithm_or_throw(algorithm_name), run_flags));
      out << to_json(result);
      if (!result.report.converged) {
        diagnose(err, "NonConvergence",
                  result.algorithm + " stopped after " +
                      std::to_string(result.report.iterations) + " iterations");
        return kNotConverged;
      }
      return kOk;
    }

    if (*cmp) {
      if (cmp_results.empty() && cmp_algorithms.empty()) {
        diagnose(err, "Usage", "compare needs --result files or an --algorithms list");
        return kInputError;
      }
      const PerturbedModel model = read_model_file(cmp_model);
      const ExactSolution oracle = oracle_for(model);
      std::vector<Row> rows;
      for (const std::string& path : cmp_results) {
        append_rows(rows, run_result_from_json(read_text_file(path)), oracle, model.base(),
                    cmp_tol);
      }
      for (const std::string& name : cmp_algorithms) {
        const Algorithm a = algorithm_or_throw(name);
        try {
          RunOptions options = cmp_alg.options(a, cmp_flags);
          if (a == Algorithm::lcbp && options.estimate_a.empty()) options.estimate_a = "response";
          append_rows(rows, execute(model, options), oracle, model.base(), cmp_tol);
        } catch (const Error& e) {
          if (exit_for(e) != kNotConverged) throw;
          diagnose(err, to_string(e.code()), name + ": " + e.what());
          rows.push_back({name, "run", std::numeric_limits<double>::infinity(),
                          std::numeric_limits<double>::infinity(),
                          std::numeric_limits<double>::infinity(),
                          std::numeric_limits<double>::infinity(), false});
        }
      }
      print_rows(out, rows, cmp_tol, cmp_format == "json");
      const bool ok = std::all_of(rows.begin(), rows.end(), [](const Row& r) { return r.pass; });
      return ok ? kOk : kToleranceExceeded;
    }

    if (*bench) {
      if (repetitions < 1) {
        diagnose(err, "Usage", "--repetitions must be at least 1");
        return kInputError;
      }
      if (sizes.empty() || bench_algorithms.empty()) {
        diagnose(err, "Usage", "bench needs --sizes and --algorithms");
        return kInputError;
      }
      const auto kind = parse_model_kind(family);
      if (!kind) throw Error(ErrorCode::InvalidArgument, "unknown family \"" + family + "\"");
      std::vector<Algorithm> algorithms;
      for (const std::string& name : bench_algorithms) algorithms.push_back(algorithm_or_throw(name));

      out << "family,n,algorithm,wall_ms_mean,wall_ms_std,max_err\n";
      for (std::size_t size : sizes) {
        const GaussianModel g = generate_model({*kind, size, bench_coupling, bench_flags.seed});
        const PerturbedModel model(g);
        const ExactSolution oracle = exact_gaussian(g);
        for (Algorithm a : algorithms) {
          RunOptions options = bench_alg.options(a, bench_flags);
          if (a == Algorithm::lcbp && options.estimate_a.empty()) options.estimate_a = "response";
          std::vector<double> times;
          RunResult last;
          for (int rep = 0; rep < repetitions; ++rep) {
            last = execute(model, options);
            times.push_back(last.wall_ms);
          }
          const double mean =
              std::accumulate(times.begin(), times.end(), 0.0) / static_cast<double>(times.size());
          double var = 0.0;
          for (double t : times) var += (t - mean) * (t - mean);
          const double sd =
              times.size() > 1 ? std::sqrt(var / static_cast<double>(times.size() - 1)) : 0.0;
          out << family << ',' << size << ',' << to_string(a) << ',' << std::fixed
              << std::setprecision(4) << mean << ',' << sd << ',' << std::scientific
              << std::setprecision(3) << max_error(last, oracle) << std::defaultfloat << '\n';
        }
      }
      return kOk;
    }

    if (*val) {
      const PerturbedModel model = read_model_file(val_model);
      const ValidationReport report = validate(model.base());
      json doc{{"nodes", model.base().size()},
               {"edges", model.base().edge_count()},
               {"potentials", model.potentials().size()},
               {"symmetric", report.symmetric},
               {"positive_variances", report.positive_variances},
               {"positive_definite", report.positive_definite},
               {"diagonally_dominant", report.diagonally_dominant},
               {"notes", report.notes}};
      out << doc.dump(2) << '\n';
      return report.positive_definite && report.positive_variances ? kOk : kInputError;
    }
  } catch (const Error& e) {
    diagnose(err, to_string(e.code()), e.what());
    return exit_for(e);
  } catch (const std::exception& e) {
    diagnose(err, "Internal", e.what());
    return kInputError;
  }
  return kInputError;
}

}  // namespace gaussbp::cli
