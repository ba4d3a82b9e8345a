// Command-line front end: build, extend and characterize response libraries, and
// run parameter scans. Exit codes: 0 ok, 2 config/input error, 3 tracking
// failure, 4 numeric failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "ssmc/errors.hpp"
#include "ssmc/estimator.hpp"
#include "ssmc/experiment.hpp"
#include "ssmc/library_io.hpp"
#include "ssmc/protocol.hpp"

namespace {

enum exit_code : int { ok = 0, unexpected = 1, config_error = 2, physics_error = 3, numeric_failure = 4 };

struct Options {
  std::string config;
  std::string out;
  std::string library;
  std::optional<std::uint64_t> seed;
  bool naive = false;
  bool save_states = false;
  bool hard_zero = false;
};

ssmc::ExperimentConfig load(const Options& o) {
  ssmc::ExperimentConfig c = o.config.empty() ? ssmc::ExperimentConfig{} : ssmc::load_config(o.config);
  if (o.save_states) c.save_states = true;
  if (o.hard_zero) c.hard_zero_blocks = true;
  if (!o.library.empty()) c.library_path = o.library;
  if (!o.out.empty()) c.output_path = o.out;
  return c;
}

void print_library_summary(const ssmc::ResponseLibrary& lib, bool hard_zero) {
  const Eigen::MatrixXd a = ssmc::assemble_matrix(lib, hard_zero);
  std::printf("method      %s\n", lib.naive ? "naive" : "ssmc");
  std::printf("species     %zu\n", lib.n_species());
  std::printf("samples     %zu (n_t = %zu, dt = %.17g)\n", lib.pulse.size(), lib.n_t, lib.dt());
  std::printf("cond(A)     %s\n", ssmc::format_number(ssmc::condition_number(a)).c_str());
  if (!lib.naive) std::printf("suppression %s\n", ssmc::format_number(ssmc::suppression_ratio(lib)).c_str());
  std::printf("steps       %llu\n", static_cast<unsigned long long>(lib.propagation_steps));
}

int build_library(const Options& o) {
  const auto c = load(o);
  const auto lib = ssmc::build_library(c, o.naive);
  if (!c.output_path.empty()) {
    ssmc::save_library(lib, c.output_path);
    std::printf("wrote       %s\n", c.output_path.c_str());
  }
  print_library_summary(lib, c.hard_zero_blocks);
  return ok;
}

int extend_library(const Options& o) {
  const auto c = load(o);
  if (c.library_path.empty()) throw ssmc::invalid_argument("extend-library: no input library (set 'library' or --library)");
  const auto lib = ssmc::load_library(c.library_path);
  const auto out = ssmc::extend_from_config(lib, c);
  const std::string path = c.output_path.empty() ? c.library_path : c.output_path;
  ssmc::save_library(out, path);
  std::printf("wrote       %s\n", path.c_str());
  print_library_summary(out, c.hard_zero_blocks);
  return ok;
}

std::string join(const Eigen::VectorXd& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ";" : "") + ssmc::format_number(v(i));
  return s;
}

int characterize(const Options& o) {
  const auto c = load(o);
  if (c.library_path.empty()) throw ssmc::invalid_argument("characterize: no input library (set 'library' or --library)");
  const auto lib = ssmc::load_library(c.library_path);
  const std::uint64_t seed = o.seed.value_or(c.seeds.front());
  Eigen::VectorXd y;
  if (c.y) {
    if (c.y->size() != lib.n_species()) throw ssmc::invalid_argument("characterize: y length differs from library n_s");
    y = Eigen::Map<const Eigen::VectorXd>(c.y->data(), static_cast<Eigen::Index>(c.y->size()));
  } else {
    y = ssmc::concentrations_for_seed(lib.n_species(), seed);
  }
  const Eigen::MatrixXd a = ssmc::assemble_matrix(lib, c.hard_zero_blocks);
  const auto outcome = ssmc::evaluate_seed(a, y, c.sigma_rel, seed, ssmc::method_of(lib));
  const auto& rep = outcome.noisy;
  std::printf("method      %s\n", ssmc::to_string(rep.method));
  std::printf("cond(A)     %s\n", ssmc::format_number(rep.cond_a).c_str());
  std::printf("sigma_rel   %s\n", ssmc::format_number(rep.noise_sigma_relative).c_str());
  std::printf("y_true      %s\n", join(rep.y_true).c_str());
  std::printf("y_est       %s\n", join(rep.y_est).c_str());
  std::printf("eps         %s\n", ssmc::format_number(rep.epsilon).c_str());
  std::printf("eps_clean   %s\n", ssmc::format_number(outcome.eps_clean).c_str());
  if (!c.output_path.empty()) {
    std::ofstream csv(c.output_path, std::ios::binary);
    if (!csv) throw ssmc::io_error("cannot open '" + c.output_path + "' for writing");
    csv << "method,cond_A,eps_clean,eps_noisy,sigma_rel,seed,y_true,y_est\n";
    csv << ssmc::to_string(rep.method) << ',' << ssmc::format_number(rep.cond_a) << ','
        << ssmc::format_number(outcome.eps_clean) << ',' << ssmc::format_number(rep.epsilon) << ','
        << ssmc::format_number(rep.noise_sigma_relative) << ',' << seed << ',' << join(rep.y_true) << ','
        << join(rep.y_est) << '\n';
  }
  return ok;
}

int scan(const Options& o) {
  auto c = load(o);
  if (o.seed) {
    const std::size_t n = c.seeds.size();
    c.seeds.clear();
    for (std::size_t i = 0; i < n; ++i) c.seeds.push_back(*o.seed + i);
  }
  const auto result = ssmc::run_scan(c);
  if (c.output_path.empty()) {
    ssmc::write_scan_csv(std::cout, result.rows);
  } else {
    std::ofstream csv(c.output_path, std::ios::binary);
    if (!csv) throw ssmc::io_error("cannot open '" + c.output_path + "' for writing");
    ssmc::write_scan_csv(csv, result.rows);
    if (!csv) throw ssmc::io_error("write to '" + c.output_path + "' failed");
  }
  for (const auto& p : result.points) {
    std::fprintf(stderr, "%s=%s %-5s cond=%s eps(median)=%s%s%s\n", c.scan_axis.c_str(),
                 ssmc::format_number(p.value).c_str(), ssmc::to_string(p.method),
                 ssmc::format_number(p.cond_a).c_str(), ssmc::format_number(p.median_eps_noisy).c_str(),
                 p.error.empty() ? "" : " error: ", p.error.c_str());
  }
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Single-pulse mixture characterization: response libraries and scans"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "experiment config (JSON)");
    sub->add_option("--out", o.out, "output path");
    sub->add_flag("--hard-zero-blocks", o.hard_zero, "zero the suppressed blocks of A");
  };

  auto* build = app.add_subcommand("build-library", "run the SSMC (or naive) protocol and save the library");
  add_common(build);
  build->add_flag("--naive", o.naive, "transform-limited baseline instead of SSMC");
  build->add_flag("--save-states", o.save_states, "store final states so the library can be extended");

  auto* extend = app.add_subcommand("extend-library", "append one species to a saved library");
  add_common(extend);
  extend->add_option("--library", o.library, "input library (overrides config)");

  auto* charac = app.add_subcommand("characterize", "recover concentrations of a synthetic mixture");
  add_common(charac);
  charac->add_option("--library", o.library, "input library (overrides config)");
  charac->add_option("--seed", o.seed, "seed for y and noise");

  auto* sc = app.add_subcommand("scan", "scan one parameter for both methods and write CSV");
  add_common(sc);
  sc->add_option("--seed", o.seed, "first seed of the configured seed range");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : config_error;
  }

  try {
    if (*build) return build_library(o);
    if (*extend) return extend_library(o);
    if (*charac) return characterize(o);
    if (*sc) return scan(o);
  } catch (const ssmc::tracking_error& e) {
    std::cerr << "tracking error: " << e.what() << '\n';
    return physics_error;
  } catch (const ssmc::numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return numeric_failure;
  } catch (const ssmc::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return config_error;
  } catch (const ssmc::io_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return config_error;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << '\n';
    return unexpected;
  }
  return unexpected;
}
