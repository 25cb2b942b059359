// spikefield command-line driver: runs the experiment described by a JSON
// config and writes CSV data and/or a JSON summary next to it.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "spikefield/experiments.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot open " + path + " for writing");
  out << content;
  if (!out) throw std::ios_base::failure("write failed for " + path);
}

std::string default_output(const spikefield::ExperimentSpec& spec) {
  return spikefield::experiment_name(spec.kind);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spikefield: simulation and stationary analysis of pulse-coupled "
               "networks with state-dependent Poisson firing"};
  app.require_subcommand(0, 1);

  bool print_schema = false;
  app.add_flag("--print-schema", print_schema, "print the JSON schema of the experiment spec");

  std::string config_path, out_path;
  std::uint64_t seed_override = 0;
  bool seed_given = false;
  long long replicas_override = 0;
  long long threads_override = -1;

  std::vector<CLI::App*> subs;
  for (const auto& [name, kind] : spikefield::experiment_names()) {
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", config_path, "JSON experiment config")->required();
    sub->add_option("--out", out_path, "output path stem (overrides config)");
    sub->add_option_function<std::uint64_t>(
           "--seed", [&](std::uint64_t v) { seed_override = v; seed_given = true; },
           "seed override");
    sub->add_option("--replicas", replicas_override, "replica count override");
    sub->add_option("--threads", threads_override, "worker thread count override");
    subs.push_back(sub);
  }

  CLI11_PARSE(app, argc, argv);

  if (print_schema) {
    std::cout << spikefield::experiment_spec_schema() << "\n";
    return spikefield::kExitOk;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help() << "\n";
    return spikefield::kExitConfig;
  }

  try {
    std::string text;
    try {
      text = read_file(config_path);
    } catch (const std::ios_base::failure& e) {
      std::cerr << "error: " << e.what() << "\n";
      return spikefield::kExitIo;
    }

    spikefield::ExperimentSpec spec = spikefield::parse_experiment_spec(text);
    const std::string sub_name = app.get_subcommands().front()->get_name();
    if (spikefield::experiment_name(spec.kind) != sub_name) {
      std::cerr << "error: config is for experiment '" << spikefield::experiment_name(spec.kind)
                << "' but subcommand is '" << sub_name << "'\n";
      return spikefield::kExitConfig;
    }
    if (seed_given) spec.seed = seed_override;
    if (replicas_override > 0) spec.replicas = static_cast<std::size_t>(replicas_override);
    if (threads_override >= 0) spec.threads = static_cast<std::size_t>(threads_override);
    if (!out_path.empty()) spec.output = out_path;
    if (spec.output.empty()) spec.output = default_output(spec);

    for (const auto& warning :
         spikefield::validate_config({spec.n_grid.empty() ? 1 : spec.n_grid.front(), spec.rate,
                                      spec.weights_for(spec.ev_grid.empty() ? 1.0
                                                                            : spec.ev_grid.front()),
                                      spec.scaling, spec.seed})) {
      std::cerr << "warning: " << warning << "\n";
    }

    const auto t0 = std::chrono::steady_clock::now();
    const auto result = spikefield::run_experiment(spec);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    try {
      if (!result.csv.empty()) {
        write_file(spec.output + ".csv", result.csv);
        std::cerr << "wrote " << spec.output << ".csv\n";
      }
      if (!result.summary.is_null()) {
        write_file(spec.output + ".json", result.summary.dump(2) + "\n");
        std::cerr << "wrote " << spec.output << ".json\n";
      }
    } catch (const std::ios_base::failure& e) {
      std::cerr << "error: " << e.what() << "\n";
      return spikefield::kExitIo;
    }
    std::cerr << "done in " << elapsed << " s\n";
    if (result.numerical_failure) {
      std::cerr << "error: numerical failure (non-convergence); see the summary\n";
      return spikefield::kExitNumerical;
    }
    return spikefield::kExitOk;
  } catch (const spikefield::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return spikefield::kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return spikefield::kExitConfig;
  } catch (const spikefield::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return spikefield::kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return spikefield::kExitNumerical;
  }
}
