#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "lpsub/lpsub.hpp"

using namespace lpsub;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  int threads = default_threads();
  std::string out;
  std::string format;
  bool no_timing = false;
};

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  return in;
}

Dataset load_dataset(const std::string& path) {
  auto in = open_in(path);
  return read_dataset_csv(in);
}

Subspace load_basis(const std::string& path) {
  auto in = open_in(path);
  return read_basis_csv(in);
}

/// Writes `text` to `path`, or to stdout when the path is empty.
void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << text;
}

std::string format_of(const Globals& g, const char* fallback) {
  const std::string f = g.format.empty() ? fallback : g.format;
  if (f != "csv" && f != "json") throw ConfigError("format must be csv or json");
  return f;
}

std::string basis_csv(const Subspace& l) {
  std::ostringstream s;
  write_basis_csv(s, l);
  return s.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lp subspace recovery: sampling, energies, certificates, minimization and experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Seed of every random stream");
  app.add_option("--threads", g.threads, "Worker threads (default: HLM_THREADS or 1)")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "Output path (default: standard output)");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  app.add_flag("--no-timing", g.no_timing, "Report runtime_ms as 0 for byte-reproducible output");

  auto* gen = app.add_subcommand("gen", "Sample a dataset from an HLM model");
  std::string config_path;
  long n = 0;
  gen->add_option("--config", config_path, "Model JSON")->required();
  gen->add_option("--n", n, "Number of points")->required()->check(CLI::PositiveNumber);

  auto* en = app.add_subcommand("energy", "lp energy of a subspace");
  std::string data_path, basis_path;
  double p = 1.0;
  en->add_option("--data", data_path, "Dataset CSV")->required();
  en->add_option("--subspace", basis_path, "Basis CSV")->required();
  en->add_option("--p", p, "Exponent p > 0")->required();

  auto* cert = app.add_subcommand("certify", "Local-minimum certificate for a subspace");
  long budget = 20000;
  std::optional<double> tol;
  cert->add_option("--data", data_path, "Dataset CSV")->required();
  cert->add_option("--subspace", basis_path, "Basis CSV")->required();
  cert->add_option("--p", p, "Exponent: 1 (sufficient condition), < 1 (span), > 1 (necessary condition)");
  cert->add_option("--budget", budget, "Search evaluations for d >= 2")->check(CLI::PositiveNumber);
  cert->add_option("--tol", tol, "Tolerance (default depends on the test)");

  auto* mini = app.add_subcommand("minimize", "Minimize the lp energy over G(D, d)");
  long dim = 1;
  OptimizerConfig ocfg;
  std::string seeding = "both", basis_out;
  mini->add_option("--data", data_path, "Dataset CSV")->required();
  mini->add_option("--d", dim, "Subspace dimension")->required();
  mini->add_option("--p", ocfg.p, "Exponent p > 0")->required();
  mini->add_option("--restarts", ocfg.restarts, "Restarts");
  mini->add_option("--max-iters", ocfg.max_iters, "Iterations per restart");
  mini->add_option("--step-init", ocfg.step_init, "Initial geodesic step");
  mini->add_option("--step-shrink", ocfg.step_shrink, "Backtracking factor in (0, 1)");
  mini->add_option("--grad-tol", ocfg.grad_tol, "Stop when |M|_F <= grad_tol * N");
  mini->add_option("--seeding", seeding, "random-grassmannian, data-span or both");
  mini->add_option("--basis-out", basis_out, "Also write the best basis as CSV");

  auto* bnd = app.add_subcommand("bounds", "Constants of the recovery theorems");
  ConstantsInputs ci;
  std::string mu_kind = "uniform-ball";
  std::optional<double> alpha2, theta;
  bnd->add_option("--p", ci.p, "Exponent p > 0")->required();
  bnd->add_option("--d", ci.d, "Subspace dimension")->required();
  bnd->add_option("--k", ci.k, "Number of subspaces K");
  bnd->add_option("--alpha0", ci.alpha0, "Outlier weight");
  bnd->add_option("--alpha1", ci.alpha1, "Weight of the most significant subspace");
  bnd->add_option("--eps", ci.eps, "Noise level");
  bnd->add_option("--mu", mu_kind, "uniform-ball or uniform-sphere");
  bnd->add_option("--radius", ci.mu.radius, "Radius R1");
  bnd->add_option("--atom", ci.mu.atom, "Mass of mu1 at the origin");
  bnd->add_option("--alpha2", alpha2, "Second weight for the two-segment bound");
  bnd->add_option("--theta", theta, "Angle for the two-segment bound");

  auto* exp = app.add_subcommand("experiment", "Run a Monte Carlo experiment spec");
  std::string spec_path, summary_path;
  exp->add_option("--spec", spec_path, "Experiment JSON")->required();
  exp->add_option("--summary", summary_path, "Per-cell summary CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (gen->parsed()) {
      auto in = open_in(config_path);
      const HlmModelConfig model = read_model_config(in);
      const Dataset data = sample(model, static_cast<Index>(n), g.seed, g.threads);
      std::ostringstream s;
      if (format_of(g, "csv") == "csv") {
        write_dataset_csv(s, data);
      } else {
        nlohmann::json pts = nlohmann::json::array();
        for (Index i = 0; i < data.size(); ++i)
          pts.push_back(std::vector<double>(data.point(i).data(), data.point(i).data() + data.ambient_dim()));
        s << nlohmann::json{{"points", pts}, {"labels", data.labels}}.dump(2) << '\n';
      }
      emit(g.out, s.str());
    } else if (en->parsed()) {
      const double e = energy(load_dataset(data_path), load_basis(basis_path), p);
      if (format_of(g, "csv") == "csv")
        emit(g.out, csv::format_double(e) + "\n");
      else
        emit(g.out, nlohmann::json{{"energy", e}, {"p", p}}.dump(2) + "\n");
    } else if (cert->parsed()) {
      const Dataset data = load_dataset(data_path);
      const Subspace l = load_basis(basis_path);
      CertificateResult r;
      if (p == 1.0)
        r = certify_l1(data, l, budget, g.seed, tol.value_or(-1.0));
      else if (p < 1.0 && p > 0.0)
        r = certify_p_less_1(data, l);
      else
        r = check_necessary_p_gt_1(data, l, p, tol.value_or(1e-9));
      if (format_of(g, "json") == "json") {
        emit(g.out, to_json(r).dump(2) + "\n");
      } else {
        emit(g.out, "verdict,margin,samples_used,heuristic\n" + to_string(r.verdict) + "," +
                        csv::format_double(r.margin) + "," + std::to_string(r.samples_used) + "," +
                        (r.heuristic ? "1" : "0") + "\n");
      }
    } else if (mini->parsed()) {
      ocfg.seed = g.seed;
      ocfg.seeding = parse_seeding(seeding);
      const auto r = minimize(load_dataset(data_path), static_cast<Index>(dim), ocfg, g.threads);
      if (!basis_out.empty()) emit(basis_out, basis_csv(r.best));
      if (format_of(g, "json") == "json")
        emit(g.out, to_json(r).dump(2) + "\n");
      else
        emit(g.out, basis_csv(r.best));
    } else if (bnd->parsed()) {
      ci.mu.kind = parse_distribution(mu_kind);
      ci.mu.dim = ci.d;
      ci.alpha2 = alpha2;
      ci.theta = theta;
      const auto j = to_json(compute_constants(ci));
      if (format_of(g, "json") == "json") {
        emit(g.out, j.dump(2) + "\n");
      } else {
        std::string s = "name,value\n";
        for (const auto& [key, value] : j.items())
          if (value.is_number()) s += key + "," + csv::format_double(value.get<double>()) + "\n";
        emit(g.out, s);
      }
    } else if (exp->parsed()) {
      auto in = open_in(spec_path);
      const ExperimentSpec spec = read_experiment_spec(in);
      const auto r = run_experiment(spec, g.threads, !g.no_timing);
      const std::string out = g.out.empty() ? spec.output : g.out;
      std::ostringstream s;
      if (format_of(g, "csv") == "csv") {
        write_trials_csv(s, r.records);
      } else {
        nlohmann::json records = nlohmann::json::array(), summary = nlohmann::json::array();
        for (const auto& rec : r.records) records.push_back(to_json(rec));
        for (const auto& c : r.summary) summary.push_back(to_json(c));
        s << nlohmann::json{{"kind", to_string(spec.kind)}, {"records", records}, {"summary", summary}}.dump(2)
          << '\n';
      }
      emit(out, s.str());
      if (!summary_path.empty()) {
        std::ostringstream sum;
        write_summary_csv(sum, r.summary);
        emit(summary_path, sum.str());
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
