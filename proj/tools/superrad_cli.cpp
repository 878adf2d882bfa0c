// Command-line front end. Exit codes: 0 success, 2 validation or I/O error,
// 3 numerical failure.

#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "superrad/io/commands.hpp"

namespace {

using superrad::io::json;
using superrad::io::RunConfig;

struct Registered {
  CLI::Option* option;
  std::function<void(json&)> store;
};

class FlagSet {
 public:
  explicit FlagSet(CLI::App* sub) : sub_(sub) {}

  template <class T>
  void add(const std::string& flag, const std::string& key, T& target, const std::string& help) {
    auto* o = sub_->add_option(flag, target, help)->capture_default_str();
    reg_.push_back({o, [key, &target](json& j) { j[key] = target; }});
  }

  template <class T>
  void add_list(const std::string& flag, const std::string& key, std::vector<T>& target, const std::string& help) {
    auto* o = sub_->add_option(flag, target, help)->delimiter(',');
    reg_.push_back({o, [key, &target](json& j) { j[key] = target; }});
  }

  void add_switch(const std::string& flag, const std::string& key, bool value, const std::string& help) {
    auto* o = sub_->add_flag(flag, help);
    reg_.push_back({o, [key, value](json& j) { j[key] = value; }});
  }

  json collect() const {
    json j = json::object();
    for (const auto& r : reg_)
      if (r.option->count() > 0) r.store(j);
    return j;
  }

 private:
  CLI::App* sub_;
  std::vector<Registered> reg_;
};

struct FlagValues {
  RunConfig d;
  std::vector<int> pair_offset;
  std::vector<int> n_rad_list;
  std::vector<double> spacing_list;
  std::string config;
};

void register_flags(FlagSet& f, FlagValues& v, CLI::App* sub) {
  f.add("--dim", "dim", v.d.dim, "lattice dimension, 2 or 3");
  f.add("--n-rad", "n_rad", v.d.n_rad, "sites across the diameter (odd)");
  f.add("--spacing", "spacing", v.d.spacing, "lattice constant d in wavelengths");
  f.add("--variant", "variant", v.d.variant, "cross-rate variant: pair, nn, mean, avg");
  f.add_list("--pair-offset", "pair_offset", v.pair_offset, "second probe site x,y,z (pair variant)");
  f.add("--t-end", "t_end", v.d.t_end, "integration end time in 1/gamma");
  f.add("--tol", "tol", v.d.tol, "relative integration tolerance");
  f.add("--atol", "atol", v.d.atol, "absolute integration tolerance");
  f.add("--max-t-end", "max_t_end", v.d.max_t_end, "cap for automatic t_end doubling");
  f.add_switch("--no-auto-extend", "auto_extend", false, "do not extend t_end while a(t_end) > 1e-4");
  f.add("--report-points", "report_points", v.d.report_points, "log-spaced reporting times");
  f.add("--epsilon", "epsilon", v.d.epsilon, "2D kernel regulator epsilon");
  f.add("--table-tol", "table_tol", v.d.table_tol, "2D kernel table tolerance");
  f.add_list("--n-rad-list", "n_rad_list", v.n_rad_list,
             "sweep sizes (default 5,7,...,25 in 3D; 5,7,...,41 in 2D)");
  f.add_list("--spacing-list", "spacing_list", v.spacing_list,
             "sweep spacings (default 0.1,0.15,0.2 in 3D; 0.06,0.08,0.1 in 2D)");
  f.add("--method", "method", v.d.method, "phase diagram method: direct, peak, both");
  f.add("--d-lo", "d_lo", v.d.d_lo, "bursting end of the bisection bracket");
  f.add("--d-hi", "d_hi", v.d.d_hi, "non-bursting end of the bisection bracket");
  f.add("--bisect-tol", "bisect_tol", v.d.bisect_tol, "bisection tolerance on d_crit");
  f.add("--reference-d", "reference_d", v.d.reference_d, "spacing for the peak-extrapolation method");
  f.add("--a", "a", v.d.a, "population a for rates");
  f.add("--n", "n", v.d.n, "inversion n for rates");
  f.add("--rho", "rho", v.d.rho, "coherence rho for rates");
  f.add("--points", "points", v.d.points, "grid points for rates and greens");
  f.add("--exponent", "exponent", v.d.exponent, "medium exponent for greens");
  f.add("--rho-min", "rho_min", v.d.rho_min, "smallest distance for greens");
  f.add("--rho-max", "rho_max", v.d.rho_max, "largest distance for greens");
  f.add("--input", "input", v.d.input, "scaling.csv to fit");
  f.add("--out-dir", "out_dir", v.d.out_dir, "output directory");
  f.add_switch("--no-svg", "svg", false, "skip SVG plots");
  sub->add_option("--config", v.config, "JSON config file; flags override its values")->check(CLI::ExistingFile);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collective emission of ordered atomic arrays"};
  app.require_subcommand(1);
  FlagValues values;
  std::map<std::string, std::pair<CLI::App*, FlagSet>> subs;
  const std::map<std::string, std::string> descriptions{
      {"simulate", "integrate one lattice from full inversion; writes timeseries.csv"},
      {"rates", "collective rates at a state and over a; writes rates.csv"},
      {"greens", "in-medium Green's function over distance; writes greens.csv"},
      {"gas", "matched homogeneous gas against the array; writes timeseries.csv"},
      {"peak-scan", "peak sweep over sizes and spacings; writes scaling.csv and fits.json"},
      {"phase-diagram", "critical spacing per size; writes phase_diagram.csv"},
      {"fit", "scaling fits of an existing scaling.csv; writes fits.json"}};
  for (const auto& name : superrad::io::command_names()) {
    CLI::App* sub = app.add_subcommand(name, descriptions.at(name));
    auto [it, ok] = subs.emplace(name, std::make_pair(sub, FlagSet(sub)));
    register_flags(it->second.second, values, sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  std::string command;
  json flags;
  for (auto& [name, entry] : subs)
    if (entry.first->parsed()) {
      command = name;
      flags = entry.second.collect();
    }
  flags["command"] = command;

  try {
    const std::optional<std::string> file =
        values.config.empty() ? std::nullopt : std::optional<std::string>(values.config);
    const RunConfig cfg = superrad::io::parse_config(file, flags);
    const json summary = superrad::io::run_command(cfg);
    std::cout << summary.dump(2) << "\n";
    return 0;
  } catch (const superrad::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const superrad::io::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 2;
  } catch (const superrad::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}
