#include "lfire/config.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "lfire/error.hpp"

namespace lfire {

using nlohmann::json;

bool MethodConfig::has(const std::string& name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

std::vector<int> ExperimentConfig::datasets() const {
  if (!subset.empty()) return subset;
  std::vector<int> all(static_cast<std::size_t>(replications));
  for (int i = 0; i < replications; ++i) all[static_cast<std::size_t>(i)] = i;
  return all;
}

namespace {

const std::set<std::string> kMethods{"lfire", "synthlik", "abc", "exact"};

class Reader {
 public:
  std::vector<std::string> errors;

  void fail(const std::string& path, const std::string& msg) { errors.push_back(path + ": " + msg); }

  /// Reports keys of `obj` not in `allowed`. Returns false when `obj` is not an object.
  bool object(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
    if (!obj.is_object()) {
      fail(path, "expected an object");
      return false;
    }
    for (const auto& [k, v] : obj.items()) {
      if (!allowed.count(k)) fail(path.empty() ? k : path + "." + k, "unknown key");
    }
    return true;
  }

  template <class T>
  bool get(const json& obj, const std::string& path, const std::string& key, T& out, bool required = false) {
    const std::string p = path.empty() ? key : path + "." + key;
    auto it = obj.find(key);
    if (it == obj.end()) {
      if (required) fail(p, "required");
      return false;
    }
    try {
      out = it->template get<T>();
      return true;
    } catch (const json::exception&) {
      fail(p, "wrong type");
      return false;
    }
  }

  void interval(const json& obj, const std::string& path, const std::string& key, Interval& out) {
    std::vector<double> v;
    if (!get(obj, path, key, v)) return;
    if (v.size() != 2) {
      fail(path + "." + key, "expected [lo, hi]");
      return;
    }
    out = {v[0], v[1]};
  }

};

std::string base_default(const SimulatorSpec& s) {
  return std::visit(
      [](const auto& m) -> std::string {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, GaussianModelSpec>) return "gaussian-poly";
        if constexpr (std::is_same_v<T, ArchModelSpec>) return "arch";
        if constexpr (std::is_same_v<T, RickerModelSpec>) return "ricker-wood";
        return "lorenz-hakkarainen";
      },
      s);
}

std::string expansion_default(const SimulatorSpec& s) {
  return std::holds_alternative<RickerModelSpec>(s) || std::holds_alternative<LorenzModelSpec>(s) ? "pairwise"
                                                                                                   : "none";
}

void parse_model(Reader& r, const json& j, ExperimentConfig& c) {
  const std::string p = "model";
  if (!j.is_object()) {
    r.fail(p, "expected an object");
    return;
  }
  std::string type;
  if (!r.get(j, p, "type", type, true)) return;
  const json priors = j.value("priors", json::object());
  const std::string pp = p + ".priors";
  if (type == "gaussian") {
    GaussianModelSpec m;
    r.object(j, p, {"type", "sigma_o", "priors"});
    r.get(j, p, "sigma_o", m.sigma_o);
    if (r.object(priors, pp, {"mu"})) {
      Interval mu{m.prior_lo, m.prior_hi};
      r.interval(priors, pp, "mu", mu);
      m.prior_lo = mu.lo;
      m.prior_hi = mu.hi;
    }
    c.simulator = m;
  } else if (type == "arch") {
    ArchModelSpec m;
    r.object(j, p, {"type", "T", "priors"});
    r.get(j, p, "T", m.T);
    if (r.object(priors, pp, {"theta1", "theta2"})) {
      r.interval(priors, pp, "theta1", m.theta1_prior);
      r.interval(priors, pp, "theta2", m.theta2_prior);
    }
    c.simulator = m;
  } else if (type == "ricker") {
    RickerModelSpec m;
    r.object(j, p, {"type", "T", "priors"});
    r.get(j, p, "T", m.T);
    if (r.object(priors, pp, {"log_r", "sigma", "phi"})) {
      r.interval(priors, pp, "log_r", m.log_r_prior);
      r.interval(priors, pp, "sigma", m.sigma_prior);
      r.interval(priors, pp, "phi", m.phi_prior);
    }
    c.simulator = m;
  } else if (type == "lorenz") {
    LorenzModelSpec m;
    r.object(j, p, {"type", "K", "F", "dt", "T", "forcing_phi", "stochastic", "initial_state", "priors"});
    r.get(j, p, "K", m.K);
    r.get(j, p, "F", m.F);
    r.get(j, p, "dt", m.dt);
    r.get(j, p, "T", m.T);
    r.get(j, p, "forcing_phi", m.forcing_phi);
    r.get(j, p, "stochastic", m.stochastic);
    std::vector<double> init;
    if (r.get(j, p, "initial_state", init)) {
      m.initial_state = Eigen::Map<const Eigen::VectorXd>(init.data(), static_cast<Eigen::Index>(init.size()));
    }
    if (r.object(priors, pp, {"theta1", "theta2"})) {
      r.interval(priors, pp, "theta1", m.theta1_prior);
      r.interval(priors, pp, "theta2", m.theta2_prior);
    }
    c.simulator = m;
  } else {
    r.fail(p + ".type", "unknown model '" + type + "' (gaussian, arch, ricker, lorenz)");
    return;
  }
  try {
    validate(c.simulator);
  } catch (const ConfigError& e) {
    r.fail(p, e.what());
  }
}

void parse_summary(Reader& r, const json& j, ExperimentConfig& c) {
  const std::string p = "summary";
  if (!r.object(j, p, {"base", "expansion", "noise_dims", "degree"})) return;
  std::string base = base_default(c.simulator);
  std::string expansion = expansion_default(c.simulator);
  r.get(j, p, "base", base);
  r.get(j, p, "expansion", expansion);
  r.get(j, p, "noise_dims", c.summary.noise_dims);
  r.get(j, p, "degree", c.summary.degree);
  try {
    c.summary.base = base_map_from_string(base);
    if (c.summary.base == BaseMap::ExternalMatrix) r.fail(p + ".base", "external-matrix is library-only");
  } catch (const ConfigError& e) {
    r.fail(p + ".base", e.what());
  }
  try {
    c.summary.expansion = expansion_from_string(expansion);
  } catch (const ConfigError& e) {
    r.fail(p + ".expansion", e.what());
  }
  if (c.summary.noise_dims < 0) r.fail(p + ".noise_dims", "must be >= 0");
}

void parse_method(Reader& r, const json& j, ExperimentConfig& c, bool model_ok) {
  const std::string p = "method";
  if (!r.object(j, p,
                {"names", "n_theta", "n_m", "grid", "particles", "lambda", "max_redraws", "abc", "gh_order"})) {
    return;
  }
  MethodConfig& m = c.method;
  r.get(j, p, "names", m.names);
  r.get(j, p, "n_theta", m.n_theta);
  m.n_m = m.n_theta;
  r.get(j, p, "n_m", m.n_m);
  r.get(j, p, "particles", m.particles);
  r.get(j, p, "max_redraws", m.max_redraws);
  r.get(j, p, "gh_order", m.gh_order);
  if (m.names.empty()) r.fail(p + ".names", "at least one method is required");
  for (const auto& n : m.names) {
    if (!kMethods.count(n)) r.fail(p + ".names", "unknown method '" + n + "' (lfire, synthlik, abc, exact)");
  }
  if (m.n_theta < 2) r.fail(p + ".n_theta", "must be >= 2");
  if (m.n_m < 2) r.fail(p + ".n_m", "must be >= 2");
  if (m.max_redraws < 0) r.fail(p + ".max_redraws", "must be >= 0");
  if (m.gh_order < 1) r.fail(p + ".gh_order", "must be >= 1");
  if (auto it = j.find("grid"); it != j.end()) {
    if (!it->is_array()) {
      r.fail(p + ".grid", "expected an array of axes");
    } else {
      for (std::size_t a = 0; a < it->size(); ++a) {
        const std::string ap = p + ".grid[" + std::to_string(a) + "]";
        AxisSpec ax;
        if (!r.object((*it)[a], ap, {"lo", "hi", "n"})) continue;
        r.get((*it)[a], ap, "lo", ax.lo, true);
        r.get((*it)[a], ap, "hi", ax.hi, true);
        r.get((*it)[a], ap, "n", ax.n, true);
        if (ax.n < 1) r.fail(ap + ".n", "must be >= 1");
        if (!(ax.lo < ax.hi)) r.fail(ap, "needs lo < hi");
        m.grid.push_back(ax);
      }
    }
  }
  const bool grid_or_particles = m.has("lfire") || m.has("synthlik") || m.has("exact");
  if (grid_or_particles && model_ok) {
    if (m.on_grid() && m.particles > 0) r.fail(p, "set either grid or particles, not both");
    if (!m.on_grid() && m.particles < 1) r.fail(p, "needs grid axes or particles >= 1");
    const std::size_t dim = prior_of(c.simulator).dimension();
    if (m.on_grid() && m.grid.size() != dim) {
      r.fail(p + ".grid", "expected " + std::to_string(dim) + " axes");
    }
  }
  if (m.has("exact")) {
    if (!m.on_grid()) r.fail(p + ".names", "exact needs grid axes");
    if (model_ok && !std::holds_alternative<GaussianModelSpec>(c.simulator) && !std::holds_alternative<ArchModelSpec>(c.simulator)) {
      r.fail(p + ".names", "exact posterior is only available for gaussian and arch");
    }
  }
  if (auto it = j.find("lambda"); it != j.end()) {
    const std::string lp = p + ".lambda";
    if (r.object(*it, lp, {"count", "min_ratio", "folds", "fixed"})) {
      r.get(*it, lp, "count", m.n_lambda);
      r.get(*it, lp, "min_ratio", m.lambda_ratio);
      r.get(*it, lp, "folds", m.folds);
      if (auto f = it->find("fixed"); f != it->end() && !f->is_null()) {
        double v = 0;
        if (r.get(*it, lp, "fixed", v)) m.fixed_lambda = v;
        if (m.fixed_lambda && !(*m.fixed_lambda >= 0)) r.fail(lp + ".fixed", "must be >= 0");
      }
      if (m.n_lambda < 1) r.fail(lp + ".count", "must be >= 1");
      if (!(m.lambda_ratio > 0 && m.lambda_ratio <= 1)) r.fail(lp + ".min_ratio", "must be in (0, 1]");
      if (m.folds < 2) r.fail(lp + ".folds", "must be >= 2");
    }
  }
  if (auto it = j.find("abc"); it != j.end()) {
    const std::string bp = p + ".abc";
    if (r.object(*it, bp, {"n_sims", "rate", "threshold"})) {
      r.get(*it, bp, "n_sims", m.abc_sims);
      m.abc_rate.reset();
      if (auto f = it->find("rate"); f != it->end() && !f->is_null()) {
        double v = 0;
        if (r.get(*it, bp, "rate", v)) m.abc_rate = v;
      }
      if (auto f = it->find("threshold"); f != it->end() && !f->is_null()) {
        double v = 0;
        if (r.get(*it, bp, "threshold", v)) m.abc_threshold = v;
      }
      if (m.abc_rate.has_value() == m.abc_threshold.has_value()) r.fail(bp, "set exactly one of rate, threshold");
      if (m.abc_rate && !(*m.abc_rate > 0 && *m.abc_rate <= 1)) r.fail(bp + ".rate", "must be in (0, 1]");
      if (m.abc_threshold && !(*m.abc_threshold >= 0)) r.fail(bp + ".threshold", "must be >= 0");
      if (m.abc_sims < 1) r.fail(bp + ".n_sims", "must be >= 1");
    }
  }
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  Reader r;
  ExperimentConfig c;
  if (!r.object(j, "", {"name", "seed", "model", "summary", "observed", "method", "forecast", "output"})) {
    throw ConfigError("config: expected a JSON object");
  }
  r.get(j, "", "name", c.name);
  r.get(j, "", "output", c.output);
  if (auto it = j.find("seed"); it == j.end()) {
    r.fail("seed", "required");
  } else if (!it->is_number_integer() || (!it->is_number_unsigned() && it->get<std::int64_t>() < 0)) {
    r.fail("seed", "must be a non-negative integer");
  } else {
    c.seed = it->get<std::uint64_t>();
  }
  const std::size_t before_model = r.errors.size();
  bool model_ok = false;
  if (auto it = j.find("model"); it == j.end()) {
    r.fail("model", "required");
  } else {
    parse_model(r, *it, c);
    model_ok = r.errors.size() == before_model;
  }
  if (model_ok) {
    c.summary = SummaryMapSpec{};
    c.summary.base = base_map_from_string(base_default(c.simulator));
    c.summary.expansion = expansion_from_string(expansion_default(c.simulator));
    parse_summary(r, j.value("summary", json::object()), c);
  }
  const std::size_t dim = model_ok ? prior_of(c.simulator).dimension() : 0;
  if (auto it = j.find("observed"); it == j.end()) {
    r.fail("observed", "required");
  } else if (r.object(*it, "observed", {"theta", "replications", "subset"})) {
    std::vector<double> th;
    if (r.get(*it, "observed", "theta", th, true)) {
      c.theta0 = Eigen::Map<const Eigen::VectorXd>(th.data(), static_cast<Eigen::Index>(th.size()));
      if (model_ok && th.size() != dim) {
        r.fail("observed.theta", "expected " + std::to_string(dim) + " values");
      } else if (model_ok && !prior_of(c.simulator).contains(c.theta0)) {
        r.fail("observed.theta", "outside the prior");
      }
    }
    r.get(*it, "observed", "replications", c.replications);
    if (c.replications < 0) r.fail("observed.replications", "must be >= 0");
    r.get(*it, "observed", "subset", c.subset);
    for (int i : c.subset) {
      if (i < 0 || i >= c.replications) r.fail("observed.subset", "index " + std::to_string(i) + " out of range");
    }
  }
  parse_method(r, j.value("method", json::object()), c, model_ok);
  if (auto it = j.find("forecast"); it != j.end() && r.object(*it, "forecast", {"steps"})) {
    r.get(*it, "forecast", "steps", c.forecast_steps);
    if (c.forecast_steps < 1) r.fail("forecast.steps", "must be >= 1");
  }
  if (model_ok && r.errors.empty()) {
    try {
      c.simulator = resolved(c.simulator);
      validate(c.simulator);
    } catch (const ConfigError& e) {
      r.fail("model", e.what());
    }
  }
  if (!r.errors.empty()) {
    std::ostringstream os;
    os << "invalid config:";
    for (const auto& e : r.errors) os << "\n  " << e;
    throw ConfigError(os.str());
  }
  return c;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return parse_config(j);
}

namespace {

json interval_json(const Interval& i) { return json::array({i.lo, i.hi}); }

json model_json(const SimulatorSpec& s) {
  return std::visit(
      [](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, GaussianModelSpec>) {
          return {{"type", "gaussian"},
                  {"sigma_o", m.sigma_o},
                  {"priors", {{"mu", json::array({m.prior_lo, m.prior_hi})}}}};
        } else if constexpr (std::is_same_v<T, ArchModelSpec>) {
          return {{"type", "arch"},
                  {"T", m.T},
                  {"priors", {{"theta1", interval_json(m.theta1_prior)}, {"theta2", interval_json(m.theta2_prior)}}}};
        } else if constexpr (std::is_same_v<T, RickerModelSpec>) {
          return {{"type", "ricker"},
                  {"T", m.T},
                  {"priors",
                   {{"log_r", interval_json(m.log_r_prior)},
                    {"sigma", interval_json(m.sigma_prior)},
                    {"phi", interval_json(m.phi_prior)}}}};
        } else {
          json j = {{"type", "lorenz"},
                    {"K", m.K},
                    {"F", m.F},
                    {"dt", m.dt},
                    {"T", m.T},
                    {"forcing_phi", m.forcing_phi},
                    {"stochastic", m.stochastic},
                    {"priors", {{"theta1", interval_json(m.theta1_prior)}, {"theta2", interval_json(m.theta2_prior)}}}};
          if (m.initial_state.size() > 0) {
            j["initial_state"] = std::vector<double>(m.initial_state.data(),
                                                     m.initial_state.data() + m.initial_state.size());
          }
          return j;
        }
      },
      s);
}

}  // namespace

json to_json(const ExperimentConfig& c) {
  const MethodConfig& m = c.method;
  json grid = json::array();
  for (const auto& a : m.grid) grid.push_back({{"lo", a.lo}, {"hi", a.hi}, {"n", a.n}});
  json method = {{"names", m.names},
                 {"n_theta", m.n_theta},
                 {"n_m", m.n_m},
                 {"grid", grid},
                 {"particles", m.particles},
                 {"max_redraws", m.max_redraws},
                 {"gh_order", m.gh_order},
                 {"lambda",
                  {{"count", m.n_lambda},
                   {"min_ratio", m.lambda_ratio},
                   {"folds", m.folds},
                   {"fixed", m.fixed_lambda ? json(*m.fixed_lambda) : json(nullptr)}}},
                 {"abc",
                  {{"n_sims", m.abc_sims},
                   {"rate", m.abc_rate ? json(*m.abc_rate) : json(nullptr)},
                   {"threshold", m.abc_threshold ? json(*m.abc_threshold) : json(nullptr)}}}};
  return {{"name", c.name},
          {"seed", c.seed},
          {"model", model_json(c.simulator)},
          {"summary",
           {{"base", to_string(c.summary.base)},
            {"expansion", to_string(c.summary.expansion)},
            {"noise_dims", c.summary.noise_dims},
            {"degree", c.summary.degree}}},
          {"observed",
           {{"theta", std::vector<double>(c.theta0.data(), c.theta0.data() + c.theta0.size())},
            {"replications", c.replications},
            {"subset", c.subset}}},
          {"method", method},
          {"forecast", {{"steps", c.forecast_steps}}},
          {"output", c.output}};
}

FitOptions fit_options(const MethodConfig& m) {
  FitOptions f;
  f.path.n_lambda = m.n_lambda;
  f.path.lambda_ratio = m.lambda_ratio;
  f.folds = m.folds;
  f.fixed_lambda = m.fixed_lambda;
  return f;
}

// Presets -------------------------------------------------------------------

namespace {

json grid_axes(std::initializer_list<std::array<double, 3>> axes) {
  json g = json::array();
  for (const auto& a : axes) g.push_back({{"lo", a[0]}, {"hi", a[1]}, {"n", static_cast<int>(a[2])}});
  return g;
}

json gaussian_preset() {
  return {{"name", "gaussian"},
          {"seed", 2300},
          {"model", {{"type", "gaussian"}, {"sigma_o", 3.0}, {"priors", {{"mu", {-20.0, 20.0}}}}}},
          {"summary", {{"base", "gaussian-poly"}, {"degree", 9}}},
          {"observed", {{"theta", json::array({2.3})}, {"replications", 1}}},
          // 21 cell centres -5, -4.5, ..., 5.
          {"method",
           {{"names", {"lfire", "synthlik", "exact"}},
            {"n_theta", 1000},
            {"n_m", 1000},
            {"grid", grid_axes({{-5.25, 5.25, 21}})}}},
          {"output", "runs/gaussian"}};
}

json arch_preset(const std::string& name, int reps, int nodes, int noise, int n) {
  return {{"name", name},
          {"seed", 7300},
          {"model", {{"type", "arch"}, {"T", 100}, {"priors", {{"theta1", {-1.0, 1.0}}, {"theta2", {0.0, 1.0}}}}}},
          {"summary", {{"base", "arch"}, {"noise_dims", noise}}},
          {"observed", {{"theta", {0.3, 0.7}}, {"replications", reps}}},
          {"method",
           {{"names", {"lfire", "synthlik", "exact"}},
            {"n_theta", n},
            {"n_m", n},
            {"grid", grid_axes({{-1.0, 1.0, static_cast<double>(nodes)}, {0.0, 1.0, static_cast<double>(nodes)}})}}},
          {"output", "runs/" + name}};
}

json arch_abc_preset(const std::string& name, int reps, int nodes) {
  return {{"name", name},
          {"seed", 7400},
          {"model", {{"type", "arch"}, {"T", 100}, {"priors", {{"theta1", {-1.0, 1.0}}, {"theta2", {0.0, 1.0}}}}}},
          {"summary", {{"base", "arch"}}},
          {"observed", {{"theta", {0.3, 0.7}}, {"replications", reps}}},
          {"method",
           {{"names", {"abc", "exact"}},
            {"grid", grid_axes({{-1.0, 1.0, static_cast<double>(nodes)}, {0.0, 1.0, static_cast<double>(nodes)}})},
            {"abc", {{"n_sims", 50000}, {"rate", 0.02}}}}},
          {"output", "runs/" + name}};
}

json ricker_preset(const std::string& name, int reps, int particles) {
  return {{"name", name},
          {"seed", 3800},
          {"model",
           {{"type", "ricker"},
            {"T", 50},
            {"priors", {{"log_r", {3.0, 5.0}}, {"sigma", {0.0, 0.6}}, {"phi", {5.0, 15.0}}}}}},
          {"summary", {{"base", "ricker-wood"}, {"expansion", "pairwise"}}},
          {"observed", {{"theta", {3.8, 0.3, 10.0}}, {"replications", reps}}},
          {"method",
           {{"names", {"lfire", "synthlik", "abc"}},
            {"n_theta", 100},
            {"n_m", 100},
            {"particles", particles},
            {"abc", {{"n_sims", 10000}, {"rate", 0.02}}}}},
          {"output", "runs/" + name}};
}

json lorenz_preset(const std::string& name, int reps, int particles, bool abc) {
  json names = abc ? json{"lfire", "synthlik", "abc"} : json{"lfire", "synthlik"};
  return {{"name", name},
          {"seed", 2010},
          {"model",
           {{"type", "lorenz"},
            {"K", 40},
            {"F", 10.0},
            {"dt", 0.025},
            {"T", 160},
            {"forcing_phi", 0.4},
            {"priors", {{"theta1", {0.5, 3.5}}, {"theta2", {0.0, 0.3}}}}}},
          {"summary", {{"base", "lorenz-hakkarainen"}, {"expansion", "pairwise"}}},
          {"observed", {{"theta", {2.0, 0.1}}, {"replications", reps}}},
          {"method",
           {{"names", names},
            {"n_theta", 100},
            {"n_m", 100},
            {"particles", particles},
            {"abc", {{"n_sims", 48000}, {"rate", 0.016}}}}},
          {"forecast", {{"steps", 80}}},
          {"output", "runs/" + name}};
}

const std::map<std::string, json>& presets() {
  static const std::map<std::string, json> p = {
      {"gaussian", gaussian_preset()},
      {"arch", arch_preset("arch", 100, 100, 0, 1000)},
      {"arch-noise", arch_preset("arch-noise", 100, 100, 15, 1000)},
      {"arch-scaled", arch_preset("arch-scaled", 20, 50, 0, 1000)},
      {"arch-noise-scaled", arch_preset("arch-noise-scaled", 20, 50, 15, 1000)},
      {"arch-abc", arch_abc_preset("arch-abc", 100, 100)},
      {"arch-abc-scaled", arch_abc_preset("arch-abc-scaled", 20, 50)},
      {"ricker", ricker_preset("ricker", 250, 10000)},
      {"ricker-scaled", ricker_preset("ricker-scaled", 20, 1000)},
      {"lorenz", lorenz_preset("lorenz", 250, 10000, true)},
      {"lorenz-scaled", lorenz_preset("lorenz-scaled", 20, 1000, false)},
  };
  return p;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& [k, v] : presets()) out.push_back(k);
  return out;
}

json preset_json(const std::string& name) {
  auto it = presets().find(name);
  if (it == presets().end()) {
    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("unknown preset '" + name + "' (" + known + ")");
  }
  return it->second;
}

ExperimentConfig load_preset(const std::string& name) { return parse_config(preset_json(name)); }

}  // namespace lfire
