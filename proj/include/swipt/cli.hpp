#ifndef SWIPT_CLI_HPP
#define SWIPT_CLI_HPP

#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "swipt/algorithms.hpp"

namespace swipt::cli {

using Json = nlohmann::ordered_json;

enum ExitCode : int { kOk = 0, kUsage = 1, kInfeasible = 2, kNoConvergence = 3 };

/// Problem with a scenario file; `where` is a JSON path such as channels.id[0][2].
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& where, const std::string& what)
      : std::runtime_error(where.empty() ? what : where + ": " + what), location(where) {}
  std::string location;
};

// ---------------------------------------------------------------------------
// formatting

/// 17 significant digits, enough to round-trip any double.
inline std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt_short(double v, int digits = 6) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

inline std::string dbm_text(double watts) { return watts > 0 ? fmt_short(watts_to_dbm(watts), 6) : "-inf"; }

inline std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

// ---------------------------------------------------------------------------
// hashing and seeds

/// FNV-1a over raw bytes.
class Fnv1a {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= c[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      const auto b = static_cast<unsigned char>(v >> (8 * i));
      bytes(&b, 1);
    }
  }
  void f64(double v) {
    if (v == 0.0) v = 0.0;  // fold -0
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    u64(bits);
  }
  void text(const std::string& s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

/// Digest of a resolved scenario: identical inputs give identical digests on any run.
inline std::uint64_t scenario_digest(const Scenario& s) {
  Fnv1a h;
  h.text("swipt-scenario-v1");
  h.u64(static_cast<std::uint64_t>(s.n_tx));
  auto channels = [&](const std::vector<CVector>& cs) {
    h.u64(cs.size());
    for (const auto& c : cs)
      for (Eigen::Index k = 0; k < c.size(); ++k) {
        h.f64(c(k).real());
        h.f64(c(k).imag());
      }
  };
  channels(s.id_channels);
  channels(s.eh_channels);
  h.f64(s.noise_power);
  h.f64(s.sum_power);
  h.f64(s.harvest_efficiency);
  h.u64(s.harvest_targets.size());
  for (double e : s.harvest_targets) h.f64(e);
  h.u64(s.weights.size());
  for (double w : s.weights) h.f64(w);
  return h.value();
}

/// splitmix64 step: advances the state and returns the next output.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of trial k (0-based): the (k+1)-th splitmix64 output from the master seed.
inline std::uint64_t trial_seed(std::uint64_t master, std::size_t k) {
  std::uint64_t state = master + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(k);
  return splitmix64(state);
}

// ---------------------------------------------------------------------------
// scenario files

namespace detail {

inline std::string at(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
inline std::string at(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

inline double number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ParseError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ParseError(path, "expected a finite number");
  return v;
}

inline double number_or_inf(const Json& j, const std::string& path) {
  if (j.is_string() && (j.get<std::string>() == "inf" || j.get<std::string>() == "+inf"))
    return std::numeric_limits<double>::infinity();
  return number(j, path);
}

inline std::uint64_t unsigned_int(const Json& j, const std::string& path) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0))
    throw ParseError(path, "expected a nonnegative integer");
  return j.get<std::uint64_t>();
}

inline std::vector<double> numbers(const Json& j, const std::string& path) {
  if (j.is_number()) return {number(j, path)};
  if (!j.is_array()) throw ParseError(path, "expected a number or a list of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], at(path, i)));
  return out;
}

inline void only_keys(const Json& j, const std::string& path, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ParseError(path, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) throw ParseError(at(path, it.key()), "unknown key");
  }
}

/// A power: bare number (Watts), {"W": x} or {"dBm": x}.
inline double power(const Json& j, const std::string& path) {
  if (j.is_number()) return number(j, path);
  if (j.is_object() && j.size() == 1) {
    if (j.contains("W")) return number(j["W"], at(path, "W"));
    if (j.contains("dBm")) return dbm_to_watts(number(j["dBm"], at(path, "dBm")));
  }
  throw ParseError(path, "expected a power: number of Watts, {\"W\": x} or {\"dBm\": x}");
}

inline cplx complex_entry(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) throw ParseError(path, "expected a complex entry [re, im]");
  return {number(j[0], at(path, 0)), number(j[1], at(path, 1))};
}

inline std::vector<CVector> channel_list(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ParseError(path, "expected a nonempty list of channel vectors");
  std::vector<CVector> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = at(path, i);
    if (!j[i].is_array() || j[i].empty()) throw ParseError(p, "expected a list of [re, im] entries");
    CVector v(static_cast<Eigen::Index>(j[i].size()));
    for (std::size_t k = 0; k < j[i].size(); ++k) v(static_cast<Eigen::Index>(k)) = complex_entry(j[i][k], at(p, k));
    out.push_back(std::move(v));
  }
  return out;
}

inline Fading fading(const Json& j, const std::string& path) {
  if (j.is_string()) {
    if (j.get<std::string>() == "rayleigh") return Fading::Rayleigh;
    if (j.get<std::string>() == "rician") return Fading::Rician;
  }
  throw ParseError(path, "expected \"rayleigh\" or \"rician\"");
}

inline Json channel_json(const CVector& v) {
  Json a = Json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(Json::array({v(k).real(), v(k).imag()}));
  return a;
}

}  // namespace detail

/// A scenario file after every tag has been resolved.
struct ScenarioFile {
  Scenario scenario;
  std::string source;                    // "explicit", "generator" or "correlation"
  std::optional<std::uint64_t> seed;     // generator / correlation seed
  std::optional<double> emax_fraction;   // targets given as a fraction of E_max
  std::optional<double> emax;            // Watts, when the fraction was resolved
  std::optional<GeneratorConfig> generator;
  std::optional<ScenarioShape> shape;
  PowerSettings powers;                  // targets left at the file's literal values
};

/// Everything but the targets; used by Monte-Carlo to draw fresh channels per trial.
inline Scenario resolve_channels(const ScenarioFile& f, std::uint64_t seed) {
  if (!f.generator || !f.shape) throw ParseError("generator", "a generator section is required");
  GeneratorConfig g = *f.generator;
  g.seed = seed;
  PowerSettings p = f.powers;
  p.harvest_targets = {1.0};
  return generate_scenario(g, *f.shape, p);
}

/// Resolves a parsed scenario document.
inline ScenarioFile parse_scenario(const Json& doc) {
  using namespace detail;
  only_keys(doc, "", {"name", "description", "sum_power", "noise_power", "harvest_efficiency", "weights", "targets",
                      "channels", "generator", "correlation"});
  ScenarioFile out;
  PowerSettings& p = out.powers;
  if (doc.contains("sum_power")) p.sum_power = power(doc["sum_power"], "sum_power");
  if (doc.contains("noise_power")) p.noise_power = power(doc["noise_power"], "noise_power");
  if (doc.contains("harvest_efficiency")) p.harvest_efficiency = number(doc["harvest_efficiency"], "harvest_efficiency");
  if (doc.contains("weights")) p.weights = numbers(doc["weights"], "weights");

  if (!doc.contains("targets")) throw ParseError("targets", "missing");
  const Json& t = doc["targets"];
  if (t.is_number() || t.is_array()) {
    p.harvest_targets = numbers(t, "targets");
  } else if (t.is_object() && t.size() == 1 && t.contains("W")) {
    p.harvest_targets = numbers(t["W"], "targets.W");
  } else if (t.is_object() && t.size() == 1 && t.contains("dBm")) {
    p.harvest_targets.clear();
    for (double d : numbers(t["dBm"], "targets.dBm")) p.harvest_targets.push_back(dbm_to_watts(d));
  } else if (t.is_object() && t.size() == 1 && t.contains("fraction_of_emax")) {
    const double fr = number(t["fraction_of_emax"], "targets.fraction_of_emax");
    if (!(fr > 0)) throw ParseError("targets.fraction_of_emax", "must be positive");
    out.emax_fraction = fr;
    p.harvest_targets = {1.0};  // placeholder until E_max is known
  } else {
    throw ParseError("targets", "expected Watts, {\"W\": ...}, {\"dBm\": ...} or {\"fraction_of_emax\": x}");
  }

  const int sources = static_cast<int>(doc.contains("channels")) + static_cast<int>(doc.contains("generator")) +
                      static_cast<int>(doc.contains("correlation"));
  if (sources != 1) throw ParseError("", "exactly one of channels, generator, correlation is required");

  try {
    if (doc.contains("channels")) {
      const Json& c = doc["channels"];
      only_keys(c, "channels", {"id", "eh"});
      if (!c.contains("id") || !c.contains("eh")) throw ParseError("channels", "needs both id and eh lists");
      auto id = channel_list(c["id"], "channels.id");
      auto eh = channel_list(c["eh"], "channels.eh");
      const Eigen::Index n = id.front().size();
      for (std::size_t i = 0; i < id.size(); ++i)
        if (id[i].size() != n) throw ParseError(at("channels.id", i), "length differs from channels.id[0]");
      for (std::size_t j = 0; j < eh.size(); ++j)
        if (eh[j].size() != n) throw ParseError(at("channels.eh", j), "length differs from channels.id[0]");
      out.source = "explicit";
      out.scenario = assemble(n, std::move(id), std::move(eh), p);
    } else if (doc.contains("generator")) {
      const Json& g = doc["generator"];
      only_keys(g, "generator", {"seed", "n_tx", "num_id", "num_eh", "pathloss_id_db", "pathloss_eh_db", "rician_k_db",
                                 "id_fading", "eh_fading"});
      GeneratorConfig cfg;
      ScenarioShape shape;
      if (g.contains("seed")) cfg.seed = unsigned_int(g["seed"], "generator.seed");
      if (g.contains("n_tx")) shape.n_tx = static_cast<Eigen::Index>(unsigned_int(g["n_tx"], "generator.n_tx"));
      if (g.contains("num_id")) shape.num_id = unsigned_int(g["num_id"], "generator.num_id");
      if (g.contains("num_eh")) shape.num_eh = unsigned_int(g["num_eh"], "generator.num_eh");
      if (g.contains("pathloss_id_db")) cfg.pathloss_id_db = number(g["pathloss_id_db"], "generator.pathloss_id_db");
      if (g.contains("pathloss_eh_db")) cfg.pathloss_eh_db = number(g["pathloss_eh_db"], "generator.pathloss_eh_db");
      if (g.contains("rician_k_db")) cfg.rician_k_db = number_or_inf(g["rician_k_db"], "generator.rician_k_db");
      if (g.contains("id_fading")) cfg.id_fading = fading(g["id_fading"], "generator.id_fading");
      if (g.contains("eh_fading")) cfg.eh_fading = fading(g["eh_fading"], "generator.eh_fading");
      out.source = "generator";
      out.seed = cfg.seed;
      out.generator = cfg;
      out.shape = shape;
      out.scenario = generate_scenario(cfg, shape, p);
    } else {
      const Json& c = doc["correlation"];
      only_keys(c, "correlation", {"seed", "n_tx", "rho", "id_norms", "eh_norms", "id_gain_db", "eh_gain_db"});
      CorrelationTarget ct;
      if (c.contains("seed")) ct.seed = unsigned_int(c["seed"], "correlation.seed");
      if (c.contains("n_tx")) ct.n_tx = static_cast<Eigen::Index>(unsigned_int(c["n_tx"], "correlation.n_tx"));
      if (!c.contains("rho") || !c["rho"].is_array() || c["rho"].empty())
        throw ParseError("correlation.rho", "expected a nonempty K_I x K_E list of rows");
      const Json& rho = c["rho"];
      const std::size_t ki = rho.size();
      const std::size_t ke = rho[0].is_array() ? rho[0].size() : 0;
      if (ke == 0) throw ParseError("correlation.rho[0]", "expected a nonempty row");
      ct.rho = RMatrix(static_cast<Eigen::Index>(ki), static_cast<Eigen::Index>(ke));
      for (std::size_t i = 0; i < ki; ++i) {
        const std::string pi = at("correlation.rho", i);
        if (!rho[i].is_array() || rho[i].size() != ke) throw ParseError(pi, "rows must all have K_E entries");
        for (std::size_t j = 0; j < ke; ++j) {
          const double v = number(rho[i][j], at(pi, j));
          if (v < 0 || v > 1) throw ParseError(at(pi, j), "correlation must lie in [0, 1]");
          ct.rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        }
      }
      auto norms = [&](const char* lin, const char* db, std::vector<double>& dst) {
        if (c.contains(lin) && c.contains(db)) throw ParseError(at("correlation", lin), std::string("conflicts with ") + db);
        if (c.contains(lin)) {
          dst = numbers(c[lin], at("correlation", lin));
        } else if (c.contains(db)) {
          for (double d : numbers(c[db], at("correlation", db))) dst.push_back(std::sqrt(db_to_linear(d)));
        } else {
          throw ParseError(at("correlation", lin), std::string("missing (or give ") + db + ")");
        }
      };
      norms("id_norms", "id_gain_db", ct.id_norms);
      norms("eh_norms", "eh_gain_db", ct.eh_norms);
      out.source = "correlation";
      out.seed = ct.seed;
      out.scenario = build_correlated_scenario(ct, p);
    }
  } catch (const ContractError& e) {
    throw ParseError("", e.what());
  } catch (const ConstructionError& e) {
    throw ParseError("correlation", e.what());
  }

  if (out.emax_fraction) {
    out.emax = compute_emax(out.scenario).emax;
    out.scenario.harvest_targets.assign(out.scenario.num_eh(), *out.emax_fraction * *out.emax);
  }
  return out;
}

inline ScenarioFile parse_scenario_text(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError("byte " + std::to_string(e.byte), "malformed file");
  }
  return parse_scenario(doc);
}

inline ScenarioFile load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, "cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_scenario_text(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path + (e.location.empty() ? "" : ":" + e.location),
                     std::string(e.what()).substr(e.location.empty() ? 0 : e.location.size() + 2));
  }
}

/// Explicit-channel form of a resolved scenario. Parsing it back gives the same scenario bit for bit.
inline Json scenario_to_json(const Scenario& s) {
  Json doc;
  doc["sum_power"] = Json{{"W", s.sum_power}};
  doc["noise_power"] = Json{{"W", s.noise_power}};
  doc["harvest_efficiency"] = s.harvest_efficiency;
  doc["weights"] = s.weights;
  doc["targets"] = Json{{"W", s.harvest_targets}};
  Json id = Json::array(), eh = Json::array();
  for (const auto& h : s.id_channels) id.push_back(detail::channel_json(h));
  for (const auto& g : s.eh_channels) eh.push_back(detail::channel_json(g));
  doc["channels"] = Json{{"id", id}, {"eh", eh}};
  return doc;
}

// ---------------------------------------------------------------------------
// records

inline Json watts_and_dbm(const std::vector<double>& w) {
  Json dbm = Json::array();
  for (double v : w) dbm.push_back(v > 0 ? Json(watts_to_dbm(v)) : Json(nullptr));
  return Json{{"W", w}, {"dBm", dbm}};
}

/// Structured result record. Holds no timings so that reruns are byte-identical.
inline Json result_record(const ScenarioFile& f, const SolveReport& r) {
  const Scenario& s = f.scenario;
  Json j;
  j["digest"] = hex64(scenario_digest(s));
  j["source"] = f.source;
  j["seed"] = f.seed ? Json(*f.seed) : Json(nullptr);
  j["algorithm"] = to_string(r.algorithm);
  j["converged"] = r.converged;
  j["wsr"] = r.solution.wsr;
  j["rates"] = r.solution.rates;
  j["weights"] = s.weights;
  j["targets"] = watts_and_dbm(s.harvest_targets);
  if (f.emax) j["emax"] = watts_and_dbm({*f.emax});
  j["harvested"] = watts_and_dbm(r.harvested);
  j["transmit_power"] = watts_and_dbm({trace_real(sum_of(r.solution.info_covariances, s.n_tx) + r.solution.energy_covariance)});
  j["case"] = to_string(r.classification.label);
  j["orthogonality"] = r.classification.orthogonality;
  j["iterations"] = r.iterations;
  if (r.g_star) j["g_star"] = *r.g_star;
  if (r.duality_gap) j["duality_gap"] = *r.duality_gap;
  if (r.p_info) j["p_info"] = watts_and_dbm({*r.p_info});
  if (r.energy_power) j["energy_power"] = watts_and_dbm({*r.energy_power});
  if (r.recovery) {
    Json rec;
    rec["path"] = r.recovery->path;
    rec["rank_a"] = r.recovery->rank_a;
    rec["representative_harvested"] = watts_and_dbm(r.recovery->representative_harvest);
    rec["representative_rates"] = r.recovery->representative_rates;
    rec["pin_scale"] = r.recovery->pin_scale;
    j["recovery"] = rec;
  }
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

// ---------------------------------------------------------------------------
// commands

namespace detail {

inline bool write_file(const std::string& path, const std::string& text, std::ostream& err) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    err << "error: cannot write " << path << "\n";
    return false;
  }
  out << text;
  return static_cast<bool>(out);
}

/// Runs a command body, mapping the library's error types onto exit codes.
template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << "\n"
        << "  certificate: largest common target scaling " << fmt_short(1.0 + e.certificate.margin, 9)
        << " (margin " << fmt_short(e.certificate.margin, 6) << ")\n";
    return kInfeasible;
  } catch (const ContractError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "solver error: " << e.what() << "\n";
    return kNoConvergence;
  }
}

inline void power_table(std::ostream& out, const char* head, const std::vector<std::vector<double>>& cols,
                        const std::vector<std::string>& names) {
  out << head << "\n  " << std::left << std::setw(6) << "j";
  for (const auto& n : names) out << std::setw(34) << n;
  out << "\n";
  for (std::size_t j = 0; j < cols.front().size(); ++j) {
    out << "  " << std::setw(6) << j + 1;
    for (const auto& c : cols) out << std::setw(34) << (fmt_short(c[j], 8) + " W / " + dbm_text(c[j]) + " dBm");
    out << "\n";
  }
  out << std::right;
}

}  // namespace detail

inline int cmd_feasibility(const std::string& path, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const ScenarioFile f = load_scenario(path);
    const FeasibilityResult r = check_feasibility(f.scenario);
    out << (r.feasible ? "feasible" : "infeasible") << "\n"
        << "margin " << fmt_short(r.margin, 9) << "  (largest common target scaling " << fmt_short(1.0 + r.margin, 9) << ")\n"
        << "digest " << hex64(scenario_digest(f.scenario)) << "\n";
    return r.feasible ? kOk : kInfeasible;
  });
}

inline int cmd_emax(const std::string& path, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const ScenarioFile f = load_scenario(path);
    const EmaxResult r = compute_emax(f.scenario);
    out << "E_max " << fmt_short(r.emax, 10) << " W  " << dbm_text(r.emax) << " dBm\n";
    const auto q = harvested_powers(f.scenario, {}, r.covariance);
    out << "achieving S_E: power " << fmt_short(trace_real(r.covariance), 8) << " W, rank "
        << range_null_split(r.covariance, 1e-6).rank << "\n";
    detail::power_table(out, "harvested at the achieving S_E", {q}, {"harvested"});
    return kOk;
  });
}

inline int cmd_solve(const std::string& path, Algorithm alg, const std::string& out_path, std::ostream& out,
                     std::ostream& err) {
  return detail::guarded(err, [&] {
    const ScenarioFile f = load_scenario(path);
    const SolveReport r = solve(f.scenario, alg);
    const Json rec = result_record(f, r);
    if (!out_path.empty() && !detail::write_file(out_path, rec.dump(2) + "\n", err)) return kUsage;

    const Scenario& s = f.scenario;
    out << "algorithm " << to_string(alg) << "   digest " << hex64(scenario_digest(s)) << "\n"
        << "wsr " << fmt_short(r.solution.wsr, 12) << " bit/s/Hz   case " << to_string(r.classification.label) << "\n";
    for (std::size_t i = 0; i < r.solution.rates.size(); ++i)
      out << "  ID " << i + 1 << "  weight " << fmt_short(s.weights[i]) << "  rate " << fmt_short(r.solution.rates[i], 12) << "\n";
    if (r.duality_gap) out << "duality gap " << fmt_short(*r.duality_gap, 3) << "  (g* " << fmt_short(*r.g_star, 12) << ")\n";
    if (r.p_info) out << "P_I* " << fmt_short(*r.p_info, 10) << " W  " << dbm_text(*r.p_info) << " dBm\n";
    if (r.energy_power) out << "Tr(S_E') " << fmt_short(*r.energy_power, 10) << " W  " << dbm_text(*r.energy_power) << " dBm\n";
    if (r.recovery && r.recovery->path != "representative") {
      out << "primal recovery: " << r.recovery->path << " (rank A* " << r.recovery->rank_a << ")\n";
      detail::power_table(out, "harvested power", {s.harvest_targets, r.recovery->representative_harvest, r.harvested},
                          {"target", "before expansion", "final"});
    } else {
      detail::power_table(out, "harvested power", {s.harvest_targets, r.harvested}, {"target", "final"});
    }
    out << "time " << fmt_short(r.wall_seconds, 3) << " s\n";
    if (!r.converged) {
      err << "warning: " << r.note << "\n";
      return kNoConvergence;
    }
    return kOk;
  });
}

struct RegionOptions {
  std::size_t grid = 41;
  std::vector<Algorithm> algorithms{Algorithm::Optimal, Algorithm::Idsied, Algorithm::Ehsied};
  bool baseline = false;
  std::string out_path;
  std::string plot_script;
};

inline std::string region_csv(const std::vector<RegionPoint>& pts) {
  std::string csv = "t,alpha1,alpha2,algorithm,r1,r2,wsr,case\n";
  for (const auto& p : pts) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    csv += fmt17(p.t) + "," + fmt17(p.weights[0]) + "," + fmt17(p.weights[1]) + "," + to_string(p.algorithm) + "," +
           fmt17(p.ok ? p.rates[0] : nan) + "," + fmt17(p.ok ? p.rates[1] : nan) + "," + fmt17(p.ok ? p.wsr : nan) + "," +
           (p.ok ? p.case_label : std::string("failed")) + "\n";
  }
  return csv;
}

inline std::string region_plot_script(const std::string& csv_path) {
  return "import csv\nimport matplotlib.pyplot as plt\n\nseries = {}\nwith open(" + Json(csv_path).dump() +
         ") as fh:\n    for row in csv.DictReader(fh):\n        if row['case'] == 'failed':\n            continue\n"
         "        series.setdefault(row['algorithm'], []).append((float(row['r1']), float(row['r2'])))\n"
         "for name, pts in series.items():\n    xs, ys = zip(*pts)\n    plt.plot(xs, ys, marker='.', label=name)\n"
         "plt.xlabel('R1 (bit/s/Hz)')\nplt.ylabel('R2 (bit/s/Hz)')\nplt.legend()\nplt.grid(True)\nplt.show()\n";
}

inline int cmd_region(const std::string& path, const RegionOptions& o, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const ScenarioFile f = load_scenario(path);
    if (f.scenario.num_id() != 2) throw ParseError(path, "region sweeps need exactly two ID receivers");
    if (o.grid < 2) throw ParseError("--grid", "need at least two grid points");
    const FeasibilityResult fr = check_feasibility(f.scenario);
    if (!fr.feasible) throw InfeasibleError("scenario is infeasible", fr);
    std::vector<Algorithm> algs = o.algorithms;
    if (o.baseline) algs.push_back(Algorithm::Baseline);
    const auto pts = capacity_region(f.scenario, even_grid(o.grid), algs);
    std::size_t failed = 0;
    for (const auto& p : pts)
      if (!p.ok) {
        ++failed;
        err << "point t=" << fmt_short(p.t) << " " << to_string(p.algorithm) << " failed: " << p.error << "\n";
      }
    const std::string csv = region_csv(pts);
    if (!o.out_path.empty()) {
      if (!detail::write_file(o.out_path, csv, err)) return kUsage;
    } else {
      out << csv;
    }
    if (!o.plot_script.empty() && !detail::write_file(o.plot_script, region_plot_script(o.out_path), err)) return kUsage;
    if (!o.out_path.empty())
      out << pts.size() << " points (" << failed << " failed) written to " << o.out_path << "\n";
    return kOk;
  });
}

struct MonteCarloOptions {
  std::size_t trials = 200;
  std::vector<double> fractions{0.0, 0.25, 0.5, 0.75, 0.9};
  std::optional<std::uint64_t> master_seed;  // defaults to the generator seed
  std::vector<Algorithm> algorithms{Algorithm::Optimal, Algorithm::Idsied, Algorithm::Ehsied};
  std::string out_path;
  std::string trials_path;  // optional per-trial CSV
  std::string plot_script;
};

/// A zero energy fraction is run at this fraction of E_max: targets must stay positive.
inline constexpr double kZeroFraction = 1e-6;

struct TrialResult {
  std::uint64_t seed = 0;
  std::string status;  // ok, infeasible, failed
  double wsr = 0.0;
};

inline int cmd_montecarlo(const std::string& path, const MonteCarloOptions& o, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const ScenarioFile f = load_scenario(path);
    if (!f.generator) throw ParseError(path, "Monte-Carlo needs a generator section");
    if (o.trials < 1) throw ParseError("--trials", "need at least one trial");
    for (double fr : o.fractions)
      if (!(fr >= 0) || !std::isfinite(fr)) throw ParseError("--evalues", "fractions must be nonnegative");
    const std::uint64_t master = o.master_seed.value_or(*f.seed);
    const std::size_t nf = o.fractions.size(), na = o.algorithms.size();
    // results[trial][fraction][algorithm]
    std::vector<std::vector<std::vector<TrialResult>>> results(
        o.trials, std::vector<std::vector<TrialResult>>(nf, std::vector<TrialResult>(na)));
    std::mutex log_mutex;
    parallel_for(o.trials, [&](std::size_t k) {
      const std::uint64_t seed = trial_seed(master, k);
      Scenario base = resolve_channels(f, seed);
      double emax = 0.0;
      try {
        emax = compute_emax(base).emax;
      } catch (const std::exception& e) {
        for (auto& row : results[k])
          for (auto& r : row) r = TrialResult{seed, "failed", 0.0};
        std::lock_guard<std::mutex> lock(log_mutex);
        err << "trial " << k << " (seed " << seed << "): " << e.what() << "\n";
        return;
      }
      for (std::size_t fi = 0; fi < nf; ++fi) {
        Scenario s = base;
        const double fr = o.fractions[fi] > 0 ? o.fractions[fi] : kZeroFraction;
        s.harvest_targets.assign(s.num_eh(), fr * emax);
        for (std::size_t ai = 0; ai < na; ++ai) {
          TrialResult& r = results[k][fi][ai];
          r.seed = seed;
          try {
            const SolveReport rep = solve(s, o.algorithms[ai]);
            r.wsr = rep.solution.wsr;
            r.status = rep.converged ? "ok" : "failed";
          } catch (const InfeasibleError&) {
            r.status = "infeasible";
          } catch (const std::exception& e) {
            r.status = "failed";
            std::lock_guard<std::mutex> lock(log_mutex);
            err << "trial " << k << " (seed " << seed << "): " << e.what() << "\n";
          }
        }
      }
    });

    std::string csv = "e_fraction,algorithm,trials,infeasible,failed,mean_wsr,stderr_wsr\n";
    for (std::size_t fi = 0; fi < nf; ++fi)
      for (std::size_t ai = 0; ai < na; ++ai) {
        std::vector<double> v;
        std::size_t infeasible = 0, failed = 0;
        for (std::size_t k = 0; k < o.trials; ++k) {
          const auto& r = results[k][fi][ai];
          if (r.status == "ok") v.push_back(r.wsr);
          else if (r.status == "infeasible") ++infeasible;
          else ++failed;
        }
        double mean = std::numeric_limits<double>::quiet_NaN(), se = std::numeric_limits<double>::quiet_NaN();
        if (!v.empty()) {
          mean = 0.0;
          for (double x : v) mean += x;
          mean /= static_cast<double>(v.size());
          if (v.size() > 1) {
            double ss = 0.0;
            for (double x : v) ss += (x - mean) * (x - mean);
            se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
          } else {
            se = 0.0;
          }
        }
        csv += fmt17(o.fractions[fi]) + "," + to_string(o.algorithms[ai]) + "," + std::to_string(v.size()) + "," +
               std::to_string(infeasible) + "," + std::to_string(failed) + "," + fmt17(mean) + "," + fmt17(se) + "\n";
      }
    if (!o.out_path.empty()) {
      if (!detail::write_file(o.out_path, csv, err)) return kUsage;
      out << o.trials << " trials written to " << o.out_path << "\n";
    } else {
      out << csv;
    }
    if (!o.trials_path.empty()) {
      std::string rows = "trial,seed,e_fraction,algorithm,status,wsr\n";
      for (std::size_t k = 0; k < o.trials; ++k)
        for (std::size_t fi = 0; fi < nf; ++fi)
          for (std::size_t ai = 0; ai < na; ++ai) {
            const auto& r = results[k][fi][ai];
            rows += std::to_string(k) + "," + std::to_string(r.seed) + "," + fmt17(o.fractions[fi]) + "," +
                    to_string(o.algorithms[ai]) + "," + r.status + "," +
                    fmt17(r.status == "ok" ? r.wsr : std::numeric_limits<double>::quiet_NaN()) + "\n";
          }
      if (!detail::write_file(o.trials_path, rows, err)) return kUsage;
    }
    if (!o.plot_script.empty()) {
      const std::string py =
          "import csv\nimport matplotlib.pyplot as plt\n\nseries = {}\nwith open(" + Json(o.out_path).dump() +
          ") as fh:\n    for row in csv.DictReader(fh):\n"
          "        series.setdefault(row['algorithm'], []).append((float(row['e_fraction']), float(row['mean_wsr']), "
          "float(row['stderr_wsr'])))\n"
          "for name, pts in series.items():\n    xs, ys, es = zip(*pts)\n    plt.errorbar(xs, ys, yerr=es, marker='o', "
          "label=name)\nplt.xlabel('E / E_max')\nplt.ylabel('average sum-rate (bit/s/Hz)')\nplt.legend()\nplt.grid(True)\n"
          "plt.show()\n";
      if (!detail::write_file(o.plot_script, py, err)) return kUsage;
    }
    return kOk;
  });
}

/// Parses "optimal,idsied" style lists.
inline std::vector<Algorithm> parse_algorithm_list(const std::string& text) {
  std::vector<Algorithm> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto a = parse_algorithm(item);
    if (!a || *a == Algorithm::Baseline) throw ParseError("--algorithms", "unknown algorithm '" + item + "'");
    out.push_back(*a);
  }
  if (out.empty()) throw ParseError("--algorithms", "empty list");
  return out;
}

}  // namespace swipt::cli

#endif  // SWIPT_CLI_HPP
