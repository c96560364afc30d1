#include <iostream>

#include "CLI11.hpp"
#include "swipt/cli.hpp"

namespace {

std::vector<double> parse_fractions(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw swipt::cli::ParseError("--evalues", "not a number: '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw swipt::cli::ParseError("--evalues", "empty list");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  namespace sc = swipt::cli;
  CLI::App app{"Weighted sum-rate maximization for SWIPT broadcast channels"};
  app.require_subcommand(1);
  std::string file;

  auto* feas = app.add_subcommand("feasibility", "check whether the harvest targets can be met");
  feas->add_option("scenario", file, "scenario file")->required();

  auto* emax = app.add_subcommand("emax", "largest common harvest target");
  emax->add_option("scenario", file, "scenario file")->required();

  std::string algorithm = "optimal", out_path;
  auto* solve = app.add_subcommand("solve", "maximize the weighted sum-rate");
  solve->add_option("scenario", file, "scenario file")->required();
  solve->add_option("--algorithm", algorithm, "optimal, idsied or ehsied")
      ->check(CLI::IsMember({"optimal", "idsied", "ehsied"}));
  solve->add_option("--out", out_path, "write the result record here");

  sc::RegionOptions ro;
  std::string region_algs = "optimal,idsied,ehsied";
  auto* region = app.add_subcommand("region", "sweep alpha = (t, 1 - t) for two ID receivers");
  region->add_option("scenario", file, "scenario file")->required();
  region->add_option("--grid", ro.grid, "number of t values in [0, 1]")->check(CLI::Range(2, 100000));
  region->add_option("--algorithms", region_algs, "comma-separated algorithms");
  region->add_flag("--baseline", ro.baseline, "add the series without harvest constraints");
  region->add_option("--out", ro.out_path, "CSV output (stdout if omitted)");
  region->add_option("--plot-script", ro.plot_script, "write a matplotlib script for the CSV");

  sc::MonteCarloOptions mo;
  std::string fractions = "0,0.25,0.5,0.75,0.9", mc_algs = "optimal,idsied,ehsied";
  std::uint64_t master = 0;
  auto* mc = app.add_subcommand("montecarlo", "average sum-rates over generated channels");
  mc->add_option("scenario", file, "scenario file with a generator section")->required();
  mc->add_option("--trials", mo.trials, "number of trials")->check(CLI::PositiveNumber);
  mc->add_option("--evalues", fractions, "comma-separated E / E_max fractions");
  mc->add_option("--algorithms", mc_algs, "comma-separated algorithms");
  auto* seed_opt = mc->add_option("--seed", master, "master seed (defaults to the generator seed)");
  mc->add_option("--out", mo.out_path, "CSV output (stdout if omitted)");
  mc->add_option("--trials-out", mo.trials_path, "per-trial CSV");
  mc->add_option("--plot-script", mo.plot_script, "write a matplotlib script for the CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return sc::kUsage;
  }

  try {
    if (*feas) return sc::cmd_feasibility(file, std::cout, std::cerr);
    if (*emax) return sc::cmd_emax(file, std::cout, std::cerr);
    if (*solve) return sc::cmd_solve(file, *swipt::parse_algorithm(algorithm), out_path, std::cout, std::cerr);
    if (*region) {
      ro.algorithms = sc::parse_algorithm_list(region_algs);
      return sc::cmd_region(file, ro, std::cout, std::cerr);
    }
    if (*mc) {
      mo.fractions = parse_fractions(fractions);
      mo.algorithms = sc::parse_algorithm_list(mc_algs);
      if (seed_opt->count() > 0) mo.master_seed = master;
      return sc::cmd_montecarlo(file, mo, std::cout, std::cerr);
    }
  } catch (const sc::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return sc::kUsage;
  }
  return sc::kUsage;
}
