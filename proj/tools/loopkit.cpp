// loopkit command-line front end.
//
//   loopkit check|moments|simulate|subordination|invariance --model M.json
//       [--spec S.json] [--seed 42] [--samples 100000] [--out R.csv]
//       [--threads K] [--no-timestamp] [--format csv|json]
//
// Exit status: 0 all verdicts pass, 1 some verdict fails, 2 bad input.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "loopkit/commands.hpp"
#include "loopkit/errors.hpp"

namespace {

enum Exit { kPass = 0, kFail = 1, kInput = 2 };

struct Output {
  std::string path;
  std::string format = "csv";
  bool no_timestamp = false;
};

int emit(const loopkit::Report& report, const Output& out) {
  std::ostringstream text;
  if (out.format == "json") {
    loopkit::write_json(report, text, !out.no_timestamp);
  } else {
    loopkit::write_csv(report, text, !out.no_timestamp);
  }
  if (out.path.empty() || out.path == "-") {
    std::cout << text.str();
  } else {
    std::ofstream f(out.path, std::ios::binary);
    if (!f) {
      std::cerr << "loopkit: cannot write " << out.path << '\n';
      return kInput;
    }
    f << text.str();
  }
  return report.pass ? kPass : kFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Loop-measure moments, subordination and loop sampling"};
  app.require_subcommand(1);

  loopkit::RunConfig config;
  Output out;
  std::string n_list;

  auto common = [&](CLI::App* sub, bool needs_spec) {
    sub->add_option("--model", config.model_path, "model definition (JSON)")->required()->check(CLI::ExistingFile);
    auto* spec = sub->add_option("--spec,--spec-file", config.spec_path, "moment/functional spec (JSON)")
                     ->check(CLI::ExistingFile);
    if (needs_spec) spec->required();
    sub->add_option("--seed", config.seed, "master seed");
    sub->add_option("--samples", config.samples, "Monte Carlo sample size")->check(CLI::PositiveNumber);
    sub->add_option("--threads", config.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", out.path, "output file (default stdout)");
    sub->add_option("--format", out.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_flag("--no-timestamp", out.no_timestamp, "omit the timestamp header line");
  };

  auto* check = app.add_subcommand("check", "identity and assumption suite for a model");
  common(check, false);
  auto* moments = app.add_subcommand("moments", "analytic loop-measure moments");
  common(moments, true);
  moments->add_option("--alpha", config.alpha, "killing rate (overrides the spec)");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo estimates against analytic moments");
  common(simulate, true);
  simulate->add_option("--alpha", config.alpha, "killing rate (overrides the spec)");
  simulate->add_option("--dump-loops", config.dump_loops, "write per-loop JSON records here");
  simulate->add_option("--dump-limit", config.dump_limit, "number of loops to dump");
  auto* subordination = app.add_subcommand("subordination", "convergence of subordinated Laplace moments");
  common(subordination, true);
  subordination->add_option("--alpha", config.alpha, "killing rate (overrides the spec)");
  subordination->add_option("--n-list", n_list, "comma separated n values");
  auto* invariance = app.add_subcommand("invariance", "rotation-invariance test");
  common(invariance, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kInput;
  }

  try {
    if (!n_list.empty()) {
      std::stringstream ss(n_list);
      std::string item;
      while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        const double n = std::stod(item, &used);
        if (used != item.size() || !(n > 0.0)) throw std::invalid_argument(item);
        config.n_list.push_back(n);
      }
    }
  } catch (const std::exception&) {
    std::cerr << "loopkit: --n-list expects positive numbers separated by commas\n";
    return kInput;
  }

  try {
    loopkit::Report report;
    if (*check) report = loopkit::cmd_check(config);
    if (*moments) report = loopkit::cmd_moments(config);
    if (*simulate) report = loopkit::cmd_simulate(config);
    if (*subordination) report = loopkit::cmd_subordination(config);
    if (*invariance) report = loopkit::cmd_invariance(config);
    return emit(report, out);
  } catch (const loopkit::Error& e) {
    std::cerr << "loopkit: " << e.what() << '\n';
    return kInput;
  } catch (const std::exception& e) {
    std::cerr << "loopkit: " << e.what() << '\n';
    return kInput;
  }
}
