#include "rh/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace rh {

using nlohmann::json;

namespace {

// Reads one JSON object, remembering which keys were used so that typos
// surface as errors instead of silently falling back to defaults.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions()) return;
    for (const auto& [k, v] : j_.items()) {
      if (!used_.count(k)) fail(path_ + "." + k, "unknown key");
    }
  }

  template <class T>
  void get(const char* key, T& out) {
    used_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      fail(path_ + "." + key, std::string("wrong type (") + it->type_name() + ")");
    }
  }

  template <class E>
  void get_enum(const char* key, E& out, std::initializer_list<std::pair<const char*, E>> names) {
    std::string s;
    bool present = j_.contains(key);
    get(key, s);
    if (!present) return;
    for (const auto& [n, v] : names) {
      if (s == n) {
        out = v;
        return;
      }
    }
    fail(path_ + "." + key, "unknown value '" + s + "'");
  }

  bool has(const char* key) const { return j_.contains(key); }
  const json& raw(const char* key) {
    used_.insert(key);
    return j_.at(key);
  }
  const std::string& path() const { return path_; }

  [[noreturn]] static void fail(const std::string& where, const std::string& what) {
    throw ConfigError(where + ": " + what);
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void require(bool ok, const std::string& where, const char* what) {
  if (!ok) Section::fail(where, what);
}

const std::initializer_list<std::pair<const char*, Stepper>> kSteppers{
    {"euler", Stepper::euler}, {"shoji_ozaki", Stepper::shoji_ozaki}};
const std::initializer_list<std::pair<const char*, SimMode>> kModes{
    {"expected_horizon", SimMode::expected_horizon}, {"real_time", SimMode::real_time}};
const std::initializer_list<std::pair<const char*, OnIrreversible>> kIrr{
    {"continue", OnIrreversible::continue_run}, {"halt", OnIrreversible::halt}};
const std::initializer_list<std::pair<const char*, PolicyChoice>> kPolicy{
    {"auto", PolicyChoice::automatic},
    {"closed_form", PolicyChoice::closed_form},
    {"numeric", PolicyChoice::numeric}};

ScenarioConfig from_json(const json& root) {
  ScenarioConfig cfg;
  Section top(root, "$");
  if (top.has("market")) {
    Section s(top.raw("market"), "market");
    s.get("a", cfg.market.a);
    s.get("b", cfg.market.b);
    s.get("c", cfg.market.c);
    s.get("fixed_cost", cfg.market.fixed_cost);
    s.get("rho", cfg.market.rho);
  }
  if (top.has("resource")) {
    Section s(top.raw("resource"), "resource");
    s.get("mu", cfg.resource.mu);
    s.get("sigma", cfg.resource.sigma);
    s.get("x0", cfg.resource.x0);
  }
  if (top.has("detection")) {
    Section s(top.raw("detection"), "detection");
    s.get("tolerance_T", cfg.detection.tolerance_T);
  }
  if (top.has("sim")) {
    Section s(top.raw("sim"), "sim");
    s.get("dt", cfg.sim.dt);
    s.get("seed", cfg.sim.seed);
    s.get("n_paths", cfg.sim.n_paths);
    s.get_enum("stepper", cfg.sim.stepper, kSteppers);
  }
  if (top.has("episode")) {
    Section s(top.raw("episode"), "episode");
    auto& e = cfg.episode;
    s.get("n_periods", e.n_periods);
    s.get("lambda0", e.lambda0);
    s.get_enum("mode", e.mode, kModes);
    s.get_enum("on_irreversible", e.on_irreversible, kIrr);
    s.get_enum("policy", e.policy, kPolicy);
    s.get("hjb_nx", e.hjb_nx);
    s.get("hjb_steps_per_unit", e.hjb_steps_per_unit);
    s.get("kfe_nx", e.kfe.nx);
    s.get("kfe_nt", e.kfe.nt);
  }
  if (top.has("policy_surface")) {
    Section s(top.raw("policy_surface"), "policy_surface");
    auto& p = cfg.surface;
    s.get("lambdas", p.lambdas);
    s.get("horizons", p.horizons);
    s.get("x_min", p.x_min);
    s.get("x_max", p.x_max);
    s.get("nx", p.nx);
    s.get("t", p.t);
  }
  if (top.has("catastrophe")) {
    Section s(top.raw("catastrophe"), "catastrophe");
    auto& c = cfg.catastrophe;
    if (s.has("cases")) {
      const json& arr = s.raw("cases");
      require(arr.is_array(), "catastrophe.cases", "expected an array");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        CatastropheCase cc;
        Section k(arr[i], "catastrophe.cases[" + std::to_string(i) + "]");
        k.get("label", cc.label);
        k.get("x0", cc.x0);
        k.get("lambda", cc.lambda);
        c.cases.push_back(cc);
      }
    }
    s.get("t_max", c.t_max);
    s.get("n_t", c.n_t);
    s.get("horizon", c.horizon);
    s.get("kfe", c.kfe);
    s.get("kfe_nx", c.kfe_nx);
    s.get("kfe_nt", c.kfe_nt);
  }
  if (top.has("detect")) {
    Section s(top.raw("detect"), "detect");
    s.get("data", cfg.detect.data);
    s.get("lambda", cfg.detect.lambda);
    s.get("discrete_correction", cfg.detect.discrete_correction);
  }
  if (top.has("output")) {
    Section s(top.raw("output"), "output");
    s.get("dir", cfg.out_dir);
    s.get("figures", cfg.figures);
  }

  for (auto issue : validate(cfg.market, cfg.resource, cfg.detection)) {
    Section::fail("$", std::string("invalid parameters: ") + to_string(issue));
  }
  require(cfg.sim.dt > 0.0, "sim.dt", "must be positive");
  require(cfg.sim.n_paths >= 1, "sim.n_paths", "must be at least 1");
  require(cfg.episode.n_periods >= 1, "episode.n_periods", "must be at least 1");
  require(cfg.episode.hjb_nx >= 16, "episode.hjb_nx", "must be at least 16");
  require(cfg.episode.hjb_steps_per_unit >= 1, "episode.hjb_steps_per_unit", "must be positive");
  require(cfg.episode.kfe.nx >= 16 && cfg.episode.kfe.nt >= 16, "episode.kfe_nx",
          "KFE grid sizes must be at least 16");
  require(cfg.surface.nx >= 1, "policy_surface.nx", "must be at least 1");
  require(cfg.surface.x_min >= 0.0 && cfg.surface.x_max >= cfg.surface.x_min,
          "policy_surface.x_max", "need 0 <= x_min <= x_max");
  require(!cfg.surface.horizons.empty() && !cfg.surface.lambdas.empty(), "policy_surface",
          "horizons and lambdas must be non-empty");
  for (double h : cfg.surface.horizons) {
    require(h > 0.0, "policy_surface.horizons", "horizons must be positive");
  }
  require(cfg.catastrophe.t_max > 0.0 && cfg.catastrophe.n_t >= 2, "catastrophe.t_max",
          "need t_max > 0 and n_t >= 2");
  require(cfg.catastrophe.horizon > 0.0, "catastrophe.horizon", "must be positive");
  require(cfg.catastrophe.kfe_nx >= 16 && cfg.catastrophe.kfe_nt >= 16, "catastrophe.kfe_nx",
          "KFE grid sizes must be at least 16");
  for (const auto& cc : cfg.catastrophe.cases) {
    require(cc.x0 > 0.0, "catastrophe.cases", "x0 must be positive");
  }
  return cfg;
}

const char* enum_name(Stepper v) { return to_string(v); }
const char* enum_name(SimMode v) { return to_string(v); }

}  // namespace

EpisodeConfig ScenarioConfig::episode_config() const {
  EpisodeConfig e = episode;
  e.detection = detection;
  e.sim = sim;
  return e;
}

ScenarioConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n');
    std::ostringstream msg;
    msg << "line " << line << ": syntax error";
    const std::string what = e.what();
    const auto pos = what.find("; ");
    if (pos != std::string::npos) msg << " (" << what.substr(pos + 2) << ")";
    throw ConfigError(msg.str());
  }
  return from_json(root);
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string dump_config(const ScenarioConfig& cfg) {
  json j;
  j["market"] = {{"a", cfg.market.a},
                 {"b", cfg.market.b},
                 {"c", cfg.market.c},
                 {"fixed_cost", cfg.market.fixed_cost},
                 {"rho", cfg.market.rho}};
  j["resource"] = {{"mu", cfg.resource.mu}, {"sigma", cfg.resource.sigma}, {"x0", cfg.resource.x0}};
  j["detection"] = {{"tolerance_T", cfg.detection.tolerance_T}};
  j["sim"] = {{"dt", cfg.sim.dt},
              {"seed", cfg.sim.seed},
              {"n_paths", cfg.sim.n_paths},
              {"stepper", enum_name(cfg.sim.stepper)}};
  const auto& e = cfg.episode;
  j["episode"] = {{"n_periods", e.n_periods},
                  {"lambda0", e.lambda0},
                  {"mode", enum_name(e.mode)},
                  {"on_irreversible", to_string(e.on_irreversible)},
                  {"policy", to_string(e.policy)},
                  {"hjb_nx", e.hjb_nx},
                  {"hjb_steps_per_unit", e.hjb_steps_per_unit},
                  {"kfe_nx", e.kfe.nx},
                  {"kfe_nt", e.kfe.nt}};
  const auto& p = cfg.surface;
  j["policy_surface"] = {{"lambdas", p.lambdas}, {"horizons", p.horizons}, {"x_min", p.x_min},
                         {"x_max", p.x_max},     {"nx", p.nx},             {"t", p.t}};
  const auto& c = cfg.catastrophe;
  json cases = json::array();
  for (const auto& cc : c.cases) {
    cases.push_back({{"label", cc.label}, {"x0", cc.x0}, {"lambda", cc.lambda}});
  }
  j["catastrophe"] = {{"cases", cases},   {"t_max", c.t_max},   {"n_t", c.n_t},
                      {"horizon", c.horizon}, {"kfe", c.kfe}, {"kfe_nx", c.kfe_nx},
                      {"kfe_nt", c.kfe_nt}};
  j["detect"] = {{"data", cfg.detect.data},
                 {"lambda", cfg.detect.lambda},
                 {"discrete_correction", cfg.detect.discrete_correction}};
  j["output"] = {{"dir", cfg.out_dir}, {"figures", cfg.figures}};
  return j.dump(2) + "\n";
}

std::uint64_t fnv1a(const std::string& bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace rh
