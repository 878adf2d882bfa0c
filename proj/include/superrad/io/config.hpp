#pragma once

// Run configuration: JSON config files merged with command-line overrides,
// validated in full before any computation starts.

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "superrad/analysis.hpp"
#include "superrad/dynamics.hpp"
#include "superrad/error.hpp"
#include "superrad/geometry.hpp"
#include "superrad/greens.hpp"
#include "superrad/rates.hpp"

namespace superrad::io {

using json = nlohmann::json;

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"simulate", "rates", "greens", "gas", "peak-scan", "phase-diagram", "fit"};
  return names;
}

struct RunConfig {
  std::string command = "simulate";

  // geometry and rates
  int dim = 3;
  int n_rad = 25;
  double spacing = 0.1;
  std::string variant = "avg";
  std::optional<LatticeVector> pair_offset;  // required by the pair variant

  // integration
  double t_end = 50.0;
  double tol = 1e-9;     // relative tolerance
  double atol = 1e-14;
  bool auto_extend = true;
  double max_t_end = 1600.0;
  int report_points = 400;

  // 2D kernel quadrature
  double epsilon = 1e-5;
  double table_tol = 2e-9;

  // sweeps and phase diagrams
  std::vector<int> n_rad_list;       // empty: dimension default
  std::vector<double> spacing_list;  // empty: dimension default
  std::string method = "both";       // direct | peak | both
  double d_lo = 0.1;
  double d_hi = 1.0;
  double bisect_tol = 0.002;
  double reference_d = 0.1;

  // rates / greens
  double a = 1.0;
  double n = 1.0;
  double rho = 0.0;
  int points = 101;
  double exponent = 0.0;
  double rho_min = 0.05;
  double rho_max = 5.0;

  // fit
  std::string input;

  // output
  std::string out_dir = "out";
  bool svg = true;

  Variant variant_value() const {
    const VariantKind k = parse_variant_kind(variant);
    if (k == VariantKind::pair) return Variant::pair(*pair_offset);
    if (k == VariantKind::nearest_neighbor) return Variant::nearest_neighbor();
    if (k == VariantKind::mean) return Variant::mean();
    return Variant::averaged();
  }

  LatticeSpec lattice() const { return {dim, spacing, n_rad}; }

  IntegratorConfig integrator() const {
    IntegratorConfig c;
    c.t_end = t_end;
    c.rtol = tol;
    c.atol = atol;
    c.auto_extend = auto_extend;
    c.max_t_end = std::max(max_t_end, t_end);
    c.report_points = report_points;
    return c;
  }

  QuadratureConfig quadrature() const {
    QuadratureConfig q;
    q.epsilon = epsilon;
    q.table_tol = table_tol;
    return q;
  }

  std::vector<int> sweep_n_rads() const {
    if (!n_rad_list.empty()) return n_rad_list;
    std::vector<int> v;
    const int hi = dim == 3 ? 25 : 41;
    for (int k = 5; k <= hi; k += 2) v.push_back(k);
    return v;
  }

  std::vector<double> sweep_spacings() const {
    if (!spacing_list.empty()) return spacing_list;
    return dim == 3 ? std::vector<double>{0.1, 0.15, 0.2} : std::vector<double>{0.06, 0.08, 0.1};
  }

  void validate() const;
};

namespace detail {

inline json config_to_json(const RunConfig& c) {
  json j;
  j["command"] = c.command;
  j["dim"] = c.dim;
  j["n_rad"] = c.n_rad;
  j["spacing"] = c.spacing;
  j["variant"] = c.variant;
  j["pair_offset"] = c.pair_offset ? json(*c.pair_offset) : json(nullptr);
  j["t_end"] = c.t_end;
  j["tol"] = c.tol;
  j["atol"] = c.atol;
  j["auto_extend"] = c.auto_extend;
  j["max_t_end"] = c.max_t_end;
  j["report_points"] = c.report_points;
  j["epsilon"] = c.epsilon;
  j["table_tol"] = c.table_tol;
  j["n_rad_list"] = c.n_rad_list;
  j["spacing_list"] = c.spacing_list;
  j["method"] = c.method;
  j["d_lo"] = c.d_lo;
  j["d_hi"] = c.d_hi;
  j["bisect_tol"] = c.bisect_tol;
  j["reference_d"] = c.reference_d;
  j["a"] = c.a;
  j["n"] = c.n;
  j["rho"] = c.rho;
  j["points"] = c.points;
  j["exponent"] = c.exponent;
  j["rho_min"] = c.rho_min;
  j["rho_max"] = c.rho_max;
  j["input"] = c.input;
  j["out_dir"] = c.out_dir;
  j["svg"] = c.svg;
  return j;
}

template <class T>
void read_key(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: key '") + key + "' has the wrong type: " + e.what());
  }
}

}  // namespace detail

inline json to_json(const RunConfig& c) { return detail::config_to_json(c); }

inline std::vector<std::string> valid_keys() {
  std::vector<std::string> keys;
  const json all = detail::config_to_json(RunConfig{});
  for (auto it = all.begin(); it != all.end(); ++it) keys.push_back(it.key());
  return keys;
}

/// Applies the keys of `j` to `c`. Unknown keys are rejected.
inline void apply_json(RunConfig& c, const json& j) {
  if (!j.is_object()) throw ValidationError("config: top level must be a JSON object");
  const json known = detail::config_to_json(RunConfig{});
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.contains(it.key())) {
      std::string list;
      for (const auto& k : valid_keys()) list += (list.empty() ? "" : ", ") + k;
      throw ValidationError("config: unknown key '" + it.key() + "'; valid keys: " + list);
    }
  }
  using detail::read_key;
  read_key(j, "command", c.command);
  read_key(j, "dim", c.dim);
  read_key(j, "n_rad", c.n_rad);
  read_key(j, "spacing", c.spacing);
  read_key(j, "variant", c.variant);
  if (j.contains("pair_offset")) {
    if (j["pair_offset"].is_null()) c.pair_offset.reset();
    else {
      LatticeVector v{};
      read_key(j, "pair_offset", v);
      c.pair_offset = v;
    }
  }
  read_key(j, "t_end", c.t_end);
  read_key(j, "tol", c.tol);
  read_key(j, "atol", c.atol);
  read_key(j, "auto_extend", c.auto_extend);
  read_key(j, "max_t_end", c.max_t_end);
  read_key(j, "report_points", c.report_points);
  read_key(j, "epsilon", c.epsilon);
  read_key(j, "table_tol", c.table_tol);
  read_key(j, "n_rad_list", c.n_rad_list);
  read_key(j, "spacing_list", c.spacing_list);
  read_key(j, "method", c.method);
  read_key(j, "d_lo", c.d_lo);
  read_key(j, "d_hi", c.d_hi);
  read_key(j, "bisect_tol", c.bisect_tol);
  read_key(j, "reference_d", c.reference_d);
  read_key(j, "a", c.a);
  read_key(j, "n", c.n);
  read_key(j, "rho", c.rho);
  read_key(j, "points", c.points);
  read_key(j, "exponent", c.exponent);
  read_key(j, "rho_min", c.rho_min);
  read_key(j, "rho_max", c.rho_max);
  read_key(j, "input", c.input);
  read_key(j, "out_dir", c.out_dir);
  read_key(j, "svg", c.svg);
}

inline json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config: '" + path + "' is not valid JSON: " + e.what());
  }
}

/// Defaults, then the file (if any), then the flags; validated.
inline RunConfig parse_config(const std::optional<std::string>& file, const json& flags) {
  RunConfig c;
  if (file) apply_json(c, load_config_file(*file));
  apply_json(c, flags);
  c.validate();
  return c;
}

inline void RunConfig::validate() const {
  bool known = false;
  for (const auto& n : command_names()) known = known || n == command;
  if (!known) throw ValidationError("config: unknown command '" + command + "'");

  const VariantKind kind = parse_variant_kind(variant);
  LatticeSpec{dim, spacing, n_rad}.validate();

  if (kind == VariantKind::pair && !pair_offset)
    throw ValidationError("config: the pair variant needs pair_offset (second probe site)");
  if (kind != VariantKind::pair && pair_offset)
    throw ValidationError("config: pair_offset is only meaningful with the pair variant");
  if (pair_offset) {
    const LatticeVector& o = *pair_offset;
    if (dim == 2 && o[2] != 0) throw ValidationError("config: pair_offset must have z = 0 in 2D");
    const int r = (n_rad - 1) / 2;
    if (command != "peak-scan" && command != "phase-diagram" && norm2(o) > r * r)
      throw ValidationError("config: pair_offset lies outside the lattice of n_rad " + std::to_string(n_rad));
  }
  if (command == "gas") {
    if (dim != 3) throw ValidationError("config: the gas comparison is only defined for dim 3");
    if (kind != VariantKind::averaged) throw ValidationError("config: the gas model only supports the avg variant");
  }

  integrator().validate();
  if (!(max_t_end >= t_end)) throw ValidationError("config: max_t_end must be >= t_end");
  quadrature().validate();

  for (int k : n_rad_list) LatticeSpec{dim, spacing, k}.validate();
  for (double d : spacing_list) LatticeSpec{dim, d, 1}.validate();
  if (command == "peak-scan" || command == "phase-diagram") {
    for (int k : sweep_n_rads()) {
      if (pair_offset) {
        const int r = (k - 1) / 2;
        if (norm2(*pair_offset) > r * r)
          throw ValidationError("config: pair_offset lies outside the lattice of n_rad " + std::to_string(k));
      }
    }
  }
  if (method != "direct" && method != "peak" && method != "both")
    throw ValidationError("config: method must be direct, peak or both, got '" + method + "'");
  if (!(d_lo > 0.0 && d_hi > d_lo)) throw ValidationError("config: need 0 < d_lo < d_hi");
  if (!(bisect_tol > 0.0)) throw ValidationError("config: bisect_tol must be positive");
  if (!(reference_d > 0.0)) throw ValidationError("config: reference_d must be positive");

  TwoAtomState{a, n, rho}.validate();
  if (points < 2) throw ValidationError("config: points must be >= 2");
  if (!std::isfinite(exponent)) throw ValidationError("config: exponent must be finite");
  if (!(rho_min > 0.0 && rho_max > rho_min)) throw ValidationError("config: need 0 < rho_min < rho_max");
  if (command == "fit" && input.empty()) throw ValidationError("config: fit needs input (a scaling.csv path)");
  if (out_dir.empty()) throw ValidationError("config: out_dir must not be empty");
}

}  // namespace superrad::io
