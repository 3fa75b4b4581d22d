#include "config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>

#include "rwlab/error.hpp"

namespace rwlab::app {

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& why) {
  throw ConfigError("config field '" + key + "': " + why);
}

template <class T>
T get(const nlohmann::json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    bad(key, "wrong type");
  }
}

template <class T>
std::vector<T> get_list(const nlohmann::json& v, const std::string& key) {
  if (v.is_array()) return get<std::vector<T>>(v, key);
  return {get<T>(v, key)};
}

FitMethod parse_fit(const std::string& s) {
  if (s == "slopeFit") return FitMethod::kSlopeFit;
  if (s == "largestN") return FitMethod::kLargestN;
  bad("fit", "expected slopeFit or largestN, got '" + s + "'");
}

}  // namespace

ScenarioParams ExperimentConfig::scenario(double scale) const {
  ScenarioParams s = ScenarioParams::defaults(d, M, scale);
  s.eps = eps;
  s.eps0 = eps0;
  s.delta = delta;
  s.delta1 = delta1.value_or(std::min(delta / (3.0 * d), 0.002));
  return s;
}

void apply_json(ExperimentConfig& cfg, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
  using Setter = std::function<void(const nlohmann::json&, const std::string&)>;
  const std::map<std::string, Setter> setters{
      {"seed", [&](auto& v, auto& k) { cfg.seed = get<std::uint64_t>(v, k); }},
      {"d", [&](auto& v, auto& k) { cfg.d = get<int>(v, k); }},
      {"mu", [&](auto& v, auto& k) { cfg.mu = get<std::string>(v, k); }},
      {"lambda", [&](auto& v, auto& k) { cfg.lambdas = get_list<double>(v, k); }},
      {"eps", [&](auto& v, auto& k) { cfg.eps = get<double>(v, k); }},
      {"n", [&](auto& v, auto& k) { cfg.n_window = get_list<std::int64_t>(v, k); }},
      {"replicas", [&](auto& v, auto& k) { cfg.replicas = get<std::size_t>(v, k); }},
      {"workers", [&](auto& v, auto& k) { cfg.workers = get<unsigned>(v, k); }},
      {"tilt",
       [&](auto& v, auto& k) {
         cfg.tilt = v.is_null() ? std::nullopt : std::optional<double>(get<double>(v, k));
       }},
      {"env_seeds", [&](auto& v, auto& k) { cfg.env_seeds = get<std::size_t>(v, k); }},
      {"fit", [&](auto& v, auto& k) { cfg.fit = parse_fit(get<std::string>(v, k)); }},
      {"step_cap", [&](auto& v, auto& k) { cfg.step_cap = get<std::int64_t>(v, k); }},
      {"volume_cap", [&](auto& v, auto& k) { cfg.volume_cap = get<std::uint64_t>(v, k); }},
      {"out", [&](auto& v, auto& k) { cfg.out = get<std::string>(v, k); }},
      {"M", [&](auto& v, auto& k) { cfg.M = get<double>(v, k); }},
      {"eps0", [&](auto& v, auto& k) { cfg.eps0 = get<double>(v, k); }},
      {"delta", [&](auto& v, auto& k) { cfg.delta = get<double>(v, k); }},
      {"delta1", [&](auto& v, auto& k) { cfg.delta1 = get<double>(v, k); }},
      {"L", [&](auto& v, auto& k) { cfg.L = get<double>(v, k); }},
      {"mode", [&](auto& v, auto& k) { cfg.mode = get<std::string>(v, k); }},
      {"region", [&](auto& v, auto& k) { cfg.region = get<std::int32_t>(v, k); }},
      {"N", [&](auto& v, auto& k) { cfg.N = get<int>(v, k); }},
      {"Jmax", [&](auto& v, auto& k) { cfg.j_max = get<int>(v, k); }},
      {"p_open", [&](auto& v, auto& k) { cfg.p_open = get<double>(v, k); }},
      {"ascii", [&](auto& v, auto& k) { cfg.ascii = get<bool>(v, k); }},
      {"events", [&](auto& v, auto& k) { cfg.events = get_list<std::string>(v, k); }},
      {"chi", [&](auto& v, auto& k) { cfg.chi = get<std::string>(v, k); }},
      {"qd_method", [&](auto& v, auto& k) { cfg.qd_method = get<std::string>(v, k); }},
      {"cache", [&](auto& v, auto& k) { cfg.cache = get<std::string>(v, k); }},
      {"t_cap", [&](auto& v, auto& k) { cfg.t_cap = get<int>(v, k); }},
      {"box", [&](auto& v, auto& k) { cfg.box = get<std::int32_t>(v, k); }},
  };
  for (const auto& [key, value] : j.items()) {
    auto it = setters.find(key);
    if (it == setters.end()) bad(key, "unknown key");
    it->second(value, key);
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config: " + path.string() + ": " + e.what());
  }
  ExperimentConfig cfg;
  apply_json(cfg, j);
  return cfg;
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.d < 1 || cfg.d > kMaxDim) bad("d", "must be in [1, " + std::to_string(kMaxDim) + "]");
  try {
    (void)cfg.law();
  } catch (const std::exception& e) {
    bad("mu", e.what());
  }
  if (cfg.lambdas.empty()) bad("lambda", "needs at least one value");
  for (double l : cfg.lambdas)
    if (!(l > 0.0) || !std::isfinite(l)) bad("lambda", "values must be finite and > 0");
  if (!(cfg.eps > 0.0 && cfg.eps < 1.0)) bad("eps", "must be in (0, 1)");
  if (cfg.n_window.empty()) bad("n", "needs at least one value");
  for (auto n : cfg.n_window)
    if (n < 1) bad("n", "values must be >= 1");
  if (cfg.replicas < 1) bad("replicas", "must be >= 1");
  if (cfg.workers < 1) bad("workers", "must be >= 1");
  if (cfg.tilt && !std::isfinite(*cfg.tilt)) bad("tilt", "must be finite");
  if (cfg.env_seeds < 1) bad("env_seeds", "must be >= 1");
  if (cfg.step_cap < 0) bad("step_cap", "must be >= 0 (0 = default)");
  if (cfg.volume_cap < 1) bad("volume_cap", "must be >= 1");
  if (!(cfg.M >= 1.0)) bad("M", "must be >= 1");
  if (!(cfg.eps0 > 0.0 && cfg.eps0 <= cfg.eps)) bad("eps0", "must be in (0, eps]");
  if (!(cfg.delta > 0.0 && cfg.delta <= cfg.eps0 / 2.0)) bad("delta", "must be in (0, eps0/2]");
  if (cfg.delta1 && !(*cfg.delta1 > 0.0)) bad("delta1", "must be > 0");
  if (cfg.L && !(*cfg.L > 0.0 && std::isfinite(*cfg.L))) bad("L", "must be finite and > 0");
  if (cfg.mode != "auto" && cfg.mode != "Case1" && cfg.mode != "Case2")
    bad("mode", "expected auto, Case1 or Case2");
  if (cfg.region && *cfg.region < 0) bad("region", "must be >= 0");
  if (cfg.N < 1) bad("N", "must be >= 1");
  if (cfg.j_max && *cfg.j_max < 1) bad("Jmax", "must be >= 1");
  if (cfg.p_open && !(*cfg.p_open >= 0.0 && *cfg.p_open <= 1.0)) bad("p_open", "must be in [0, 1]");
  for (const auto& e : cfg.events)
    if (e != "A_hL_M" && e != "TildeA" && e != "A_M_eps0_delta" && e != "Chain" && e != "Case2")
      bad("events", "unknown event kind '" + e + "'");
  if (cfg.chi != "literal" && cfg.chi != "diffusive") bad("chi", "expected literal or diffusive");
  if (cfg.qd_method != "quadrature" && cfg.qd_method != "montecarlo")
    bad("qd_method", "expected quadrature or montecarlo");
  if (cfg.t_cap < 1 || cfg.t_cap > 20) bad("t_cap", "must be in [1, 20]");
  if (cfg.box < 1) bad("box", "must be >= 1");
}

nlohmann::ordered_json to_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  j["seed"] = cfg.seed;
  j["d"] = cfg.d;
  j["mu"] = cfg.mu;
  j["lambda"] = cfg.lambdas;
  j["eps"] = cfg.eps;
  j["n"] = cfg.n_window;
  j["replicas"] = cfg.replicas;
  j["workers"] = cfg.workers;
  j["tilt"] = cfg.tilt ? nlohmann::ordered_json(*cfg.tilt) : nlohmann::ordered_json(nullptr);
  j["env_seeds"] = cfg.env_seeds;
  j["fit"] = to_string(cfg.fit);
  j["step_cap"] = cfg.step_cap;
  j["volume_cap"] = cfg.volume_cap;
  j["M"] = cfg.M;
  j["eps0"] = cfg.eps0;
  j["delta"] = cfg.delta;
  if (cfg.delta1) j["delta1"] = *cfg.delta1;
  if (cfg.L) j["L"] = *cfg.L;
  j["mode"] = cfg.mode;
  if (cfg.region) j["region"] = *cfg.region;
  j["N"] = cfg.N;
  if (cfg.j_max) j["Jmax"] = *cfg.j_max;
  if (cfg.p_open) j["p_open"] = *cfg.p_open;
  j["events"] = cfg.events;
  j["chi"] = cfg.chi;
  j["qd_method"] = cfg.qd_method;
  j["t_cap"] = cfg.t_cap;
  j["box"] = cfg.box;
  return j;
}

}  // namespace rwlab::app
