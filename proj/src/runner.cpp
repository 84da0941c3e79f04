#include "lfire/runner.hpp"

#include <chrono>
#include <cstdio>
#include <exception>
#include <limits>
#include <map>
#include <optional>
#include <set>

#include "lfire/baselines.hpp"
#include "lfire/engine.hpp"
#include "lfire/error.hpp"
#include "lfire/io.hpp"
#include "lfire/metrics.hpp"

#ifndef LFIRE_VERSION
#define LFIRE_VERSION "0.0.0"
#endif

namespace lfire {

namespace fs = std::filesystem;
using nlohmann::json;

std::string version_string() { return std::string("lfire ") + LFIRE_VERSION; }

namespace {

std::string index_tag(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03d", i);
  return buf;
}

class Stopwatch {
 public:
  void stage(const std::string& name) {
    const auto now = std::chrono::steady_clock::now();
    if (!current_.empty()) seconds_[current_] += std::chrono::duration<double>(now - start_).count();
    current_ = name;
    start_ = now;
  }
  json finish() {
    stage("");
    json j = json::object();
    double total = 0;
    for (const auto& [k, v] : seconds_) {
      j[k] = v;
      total += v;
    }
    return {{"stages", j}, {"total_seconds", total}};
  }

 private:
  std::string current_;
  std::chrono::steady_clock::time_point start_;
  std::map<std::string, double> seconds_;
};

json stream_table() {
  return {{"bank", static_cast<int>(StreamTag::Bank)},
          {"node", static_cast<int>(StreamTag::Node)},
          {"particles", static_cast<int>(StreamTag::Particles)},
          {"observed_noise", static_cast<int>(StreamTag::ObservedNoise)},
          {"observed", static_cast<int>(StreamTag::Observed)},
          {"abc", static_cast<int>(StreamTag::Abc)},
          {"forecast", static_cast<int>(StreamTag::Forecast)},
          {"dataset", static_cast<int>(StreamTag::Dataset)}};
}

void write_manifest(const RunContext& ctx, const std::string& command, const std::vector<std::string>& artifacts,
                    json extra, Stopwatch& watch) {
  json m = {{"command", command},
            {"version", version_string()},
            {"config", to_json(ctx.config)},
            {"seeds", {{"master", ctx.config.seed}, {"stream_tags", stream_table()}}},
            {"artifacts", artifacts}};
  for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
  write_text_file(ctx.out / (command + ".manifest.json"), m.dump(2) + "\n");
  write_text_file(ctx.out / (command + ".timings.json"), watch.finish().dump(2) + "\n");
}

/// Rethrows with the dataset id prepended, keeping the error category.
template <class F>
auto with_dataset(int i, F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError("dataset " + std::to_string(i) + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError("dataset " + std::to_string(i) + ": " + e.what());
  }
}

std::pair<Eigen::Index, Eigen::Index> dataset_shape(const SimulatorSpec& s) {
  return std::visit(
      [](const auto& m) -> std::pair<Eigen::Index, Eigen::Index> {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, GaussianModelSpec>) return {1, 1};
        if constexpr (std::is_same_v<T, ArchModelSpec>) return {1, m.T};
        if constexpr (std::is_same_v<T, RickerModelSpec>) return {1, m.T};
        if constexpr (std::is_same_v<T, LorenzModelSpec>) return {m.K, m.T + 1};
      },
      s);
}

Dataset load_dataset(const RunContext& ctx, int i) {
  const fs::path p = ctx.out / dataset_path(i);
  if (!fs::exists(p)) throw ConfigError("dataset " + std::to_string(i) + ": missing " + p.string() + " (run simulate)");
  Dataset x = read_matrix_csv(p);
  const auto [r, c] = dataset_shape(ctx.config.simulator);
  if (x.rows() != r || x.cols() != c) {
    throw ConfigError("dataset " + std::to_string(i) + ": expected " + std::to_string(r) + "x" + std::to_string(c) +
                      " values in " + p.string());
  }
  return x;
}

GridAxes config_axes(const MethodConfig& m) {
  GridAxes axes;
  for (const auto& a : m.grid) axes.push_back(cell_centered_axis(a.lo, a.hi, a.n));
  return axes;
}

WeightedSample uniform_sample(const Eigen::MatrixXd& particles) {
  WeightedSample ws;
  ws.particles = particles;
  const auto n = static_cast<double>(particles.rows());
  ws.weights = Eigen::VectorXd::Constant(particles.rows(), 1.0 / n);
  ws.ess = n;
  return ws;
}

/// Node fits shared by every dataset whose summary map is the same.
struct Field {
  std::uint64_t seed = 0;
  std::optional<SummaryMap> map;
  std::optional<MarginalBank> bank;
  Eigen::MatrixXd nodes;
  std::vector<NodeResult> results;
};

Field build_field(const RunContext& ctx, const Model& model, const SummaryMap& map, std::uint64_t seed,
                  Stopwatch& watch) {
  const MethodConfig& mc = ctx.config.method;
  Field f;
  f.seed = seed;
  f.map = map;
  watch.stage("bank");
  if (mc.has("lfire")) {
    Rng rng = stream_rng(seed, StreamTag::Bank);
    f.bank = build_marginal_bank(model, map, mc.n_m, rng, mc.max_redraws);
  }
  if (mc.on_grid()) {
    f.nodes = grid_nodes(config_axes(mc));
  } else {
    Rng rng = stream_rng(seed, StreamTag::Particles);
    f.nodes = sample_prior(model.prior, mc.particles, rng);
  }
  watch.stage("nodes");
  NodeOptions opt;
  opt.n_theta = mc.n_theta;
  opt.lfire = mc.has("lfire");
  opt.synthetic = mc.has("synthlik");
  opt.fit = fit_options(mc);
  opt.max_redraws = mc.max_redraws;
  f.results = evaluate_nodes(model, map, f.bank ? &*f.bank : nullptr, f.nodes, seed, opt, ctx.workers);
  return f;
}

/// Rejection ABC reference table; row j uses stream (seed, Abc, j).
struct AbcTable {
  Eigen::MatrixXd thetas;
  Eigen::MatrixXd stats;
};

AbcTable build_abc_table(const RunContext& ctx, const Model& model, const SummaryMap& map, std::uint64_t seed) {
  const MethodConfig& mc = ctx.config.method;
  const int n = mc.abc_sims;
  AbcTable t;
  t.thetas.resize(n, static_cast<Eigen::Index>(model.prior.dimension()));
  std::vector<Eigen::VectorXd> rows(static_cast<std::size_t>(n));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 64) num_threads(ctx.workers)
  for (int j = 0; j < n; ++j) {
    try {
      Rng rng = stream_rng(seed, StreamTag::Abc, static_cast<std::uint64_t>(j));
      const Eigen::VectorXd theta = sample_prior(model.prior, 1, rng).row(0).transpose();
      int redraws = 0;
      rows[static_cast<std::size_t>(j)] = simulate_with_redraw(
          model, theta, rng, mc.max_redraws, redraws, [&](const Dataset& x) { return map.base_statistics(x); });
      t.thetas.row(j) = theta.transpose();
    } catch (...) {
      errors[static_cast<std::size_t>(j)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  t.stats.resize(n, rows.empty() ? 0 : rows[0].size());
  for (int j = 0; j < n; ++j) t.stats.row(j) = rows[static_cast<std::size_t>(j)].transpose();
  return t;
}

void write_coefficients(const fs::path& path, const Field& f, const std::vector<std::string>& names) {
  TextTable t;
  t.header = names;
  for (const char* h : {"ok", "intercept", "lambda_min", "cv_risk", "nonzero"}) t.header.emplace_back(h);
  for (const auto& n : f.map->names()) t.header.push_back("beta_" + n);
  const Eigen::Index b = f.map->dimension();
  for (Eigen::Index g = 0; g < f.nodes.rows(); ++g) {
    const NodeResult& r = f.results[static_cast<std::size_t>(g)];
    std::vector<std::string> row;
    for (Eigen::Index k = 0; k < f.nodes.cols(); ++k) row.push_back(format_double(f.nodes(g, k)));
    const bool ok = r.ok && r.ratio.has_value();
    row.emplace_back(ok ? "1" : "0");
    const double nan = std::numeric_limits<double>::quiet_NaN();
    row.push_back(format_double(ok ? r.ratio->intercept : nan));
    row.push_back(format_double(ok ? r.ratio->lambda_min : nan));
    row.push_back(format_double(ok ? r.ratio->cv_risk : nan));
    row.push_back(ok ? std::to_string(r.ratio->nonzero) : "0");
    for (Eigen::Index j = 0; j < b; ++j) row.push_back(format_double(ok ? r.ratio->beta[j] : nan));
    t.rows.push_back(std::move(row));
  }
  write_text_table_csv(path, t);
}

json field_diagnostics(const Field& f) {
  int failed = 0;
  int redraws = 0;
  json reasons = json::object();
  for (std::size_t g = 0; g < f.results.size(); ++g) {
    const NodeResult& r = f.results[g];
    redraws += r.redraws;
    if (!r.failure.empty()) {
      ++failed;
      if (reasons.size() < 20) reasons[std::to_string(g)] = r.failure;
    }
  }
  return {{"seed", f.seed},
          {"nodes", f.results.size()},
          {"nodes_with_failures", failed},
          {"failures", reasons},
          {"redraws", redraws},
          {"bank_redraws", f.bank ? f.bank->redraws : 0}};
}

}  // namespace

fs::path dataset_path(int dataset) { return fs::path("observed") / ("data_" + index_tag(dataset) + ".csv"); }

fs::path posterior_path(const std::string& method, int dataset) {
  return fs::path("posterior") / (method + "_" + index_tag(dataset) + ".csv");
}

Dataset simulate_observed(const ExperimentConfig& config, int dataset) {
  Rng rng = stream_rng(config.seed, StreamTag::Observed, static_cast<std::uint64_t>(dataset));
  return simulate(config.simulator, config.theta0, rng);
}

// CSV artifacts ----------------------------------------------------------------

void write_grid_csv(const fs::path& path, const GridPosterior& gp, const std::vector<std::string>& names) {
  if (names.size() != gp.axes.size()) throw ConfigError("write_grid_csv: name count differs from grid dimension");
  const Eigen::MatrixXd nodes = gp.nodes();
  Table t;
  t.header = names;
  for (const char* h : {"log_value", "density", "in_support"}) t.header.emplace_back(h);
  const auto d = static_cast<Eigen::Index>(names.size());
  t.rows.resize(nodes.rows(), d + 3);
  t.rows.leftCols(d) = nodes;
  t.rows.col(d) = gp.log_values;
  t.rows.col(d + 1) = gp.density;
  for (Eigen::Index g = 0; g < nodes.rows(); ++g) t.rows(g, d + 2) = gp.in_support[static_cast<std::size_t>(g)];
  write_table_csv(path, t);
}

GridPosterior read_grid_csv(const fs::path& path, std::size_t dim) {
  const Table t = read_table_csv(path);
  const auto d = static_cast<Eigen::Index>(dim);
  if (t.rows.cols() != d + 3 || t.header.size() != dim + 3 || t.header[dim + 1] != "density") {
    throw ConfigError(path.string() + ": not a " + std::to_string(dim) + "-d grid posterior");
  }
  GridAxes axes(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    const Eigen::VectorXd col = t.rows.col(static_cast<Eigen::Index>(k));
    std::set<double> vals(col.data(), col.data() + col.size());
    std::vector<double> v(vals.begin(), vals.end());
    axes[k] = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  const Eigen::MatrixXd expect = grid_nodes(axes);
  if (expect.rows() != t.rows.rows() || expect != t.rows.leftCols(d)) {
    throw ConfigError(path.string() + ": rows are not a product grid in canonical order");
  }
  GridPosterior gp;
  gp.axes = axes;
  gp.log_values = t.rows.col(d);
  gp.density = t.rows.col(d + 1);
  gp.in_support.resize(static_cast<std::size_t>(t.rows.rows()));
  for (Eigen::Index g = 0; g < t.rows.rows(); ++g) gp.in_support[static_cast<std::size_t>(g)] = t.rows(g, d + 2) != 0;
  gp.cell = cell_measure(axes);
  return gp;
}

void write_sample_csv(const fs::path& path, const WeightedSample& ws, const std::vector<std::string>& names) {
  if (static_cast<Eigen::Index>(names.size()) != ws.particles.cols()) {
    throw ConfigError("write_sample_csv: name count differs from particle dimension");
  }
  Table t;
  t.header = names;
  t.header.emplace_back("weight");
  t.rows.resize(ws.particles.rows(), ws.particles.cols() + 1);
  t.rows.leftCols(ws.particles.cols()) = ws.particles;
  t.rows.rightCols(1) = ws.weights;
  write_table_csv(path, t);
}

WeightedSample read_sample_csv(const fs::path& path, std::size_t dim) {
  const Table t = read_table_csv(path);
  const auto d = static_cast<Eigen::Index>(dim);
  if (t.rows.cols() != d + 1 || t.header.size() != dim + 1 || t.header.back() != "weight") {
    throw ConfigError(path.string() + ": not a " + std::to_string(dim) + "-d weighted sample");
  }
  WeightedSample ws;
  ws.particles = t.rows.leftCols(d);
  ws.weights = t.rows.col(d);
  const double s2 = ws.weights.squaredNorm();
  ws.ess = s2 > 0 ? 1.0 / s2 : 0.0;
  return ws;
}

Moments Artifact::moments() const { return grid ? posterior_moments(posterior) : posterior_moments(sample); }

Artifact read_artifact(const fs::path& path, std::size_t dim) {
  if (!fs::exists(path)) throw ConfigError("missing posterior artifact " + path.string() + " (run infer)");
  Artifact a;
  const Table head = read_table_csv(path);
  if (!head.header.empty() && head.header.back() == "weight") {
    a.sample = read_sample_csv(path, dim);
  } else {
    a.grid = true;
    a.posterior = read_grid_csv(path, dim);
  }
  return a;
}

// simulate -------------------------------------------------------------------

std::vector<std::string> cmd_simulate(const RunContext& ctx) {
  Stopwatch watch;
  watch.stage("simulate");
  std::vector<std::string> artifacts;
  for (int i : ctx.config.datasets()) {
    const Dataset x = with_dataset(i, [&] { return simulate_observed(ctx.config, i); });
    write_matrix_csv(ctx.out / dataset_path(i), x);
    artifacts.push_back(dataset_path(i).generic_string());
  }
  write_manifest(ctx, "simulate", artifacts, json::object(), watch);
  return artifacts;
}

// infer ----------------------------------------------------------------------

std::vector<std::string> cmd_infer(const RunContext& ctx) {
  const ExperimentConfig& c = ctx.config;
  const MethodConfig& mc = c.method;
  Stopwatch watch;
  watch.stage("setup");
  const Model model = make_model(c.simulator, c.summary);
  const std::vector<int> ids = c.datasets();
  std::vector<Dataset> data;
  for (int i : ids) data.push_back(load_dataset(ctx, i));

  std::vector<std::string> artifacts;
  json fields = json::array();
  json ess = json::object();
  const bool nodes_needed = mc.has("lfire") || mc.has("synthlik");
  const GridAxes axes = config_axes(mc);
  std::optional<GaussHermite> gh;
  if (mc.has("exact") && std::holds_alternative<ArchModelSpec>(c.simulator)) gh = gauss_hermite(mc.gh_order);

  std::optional<Field> shared;
  std::optional<AbcTable> shared_abc;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const int i = ids[k];
    const Dataset& x0 = data[k];
    with_dataset(i, [&] {
      const SummaryMap map = summary_map_for(model, x0);
      // Maps without a reference dataset do not depend on x0, so one field serves every dataset.
      const bool reuse = !map.uses_reference();
      const std::uint64_t seed =
          reuse ? c.seed : derive_stream(c.seed, static_cast<std::uint64_t>(StreamTag::Dataset), i);
      const std::string suffix = reuse ? std::string() : "_" + index_tag(i);

      if (nodes_needed) {
        std::optional<Field> local;
        if (!reuse || !shared) {
          Field f = build_field(ctx, model, map, seed, watch);
          fields.push_back(field_diagnostics(f));
          fields.back()["datasets"] = reuse ? json("all") : json(i);
          if (mc.has("lfire")) {
            const fs::path rel = fs::path("posterior") / ("lfire_coefficients" + suffix + ".csv");
            write_coefficients(ctx.out / rel, f, model.parameter_names);
            artifacts.push_back(rel.generic_string());
          }
          if (reuse) {
            shared = std::move(f);
          } else {
            local = std::move(f);
          }
        }
        const Field& f = reuse ? *shared : *local;
        watch.stage("posterior");
        const Eigen::VectorXd psi0 =
            mc.has("lfire") ? observed_summary(map, x0, c.seed, static_cast<std::uint64_t>(i)) : Eigen::VectorXd();
        const Eigen::VectorXd phi0 = mc.has("synthlik") ? map.raw_statistics(x0) : Eigen::VectorXd();
        for (const auto& [name, method] : {std::pair{"lfire", Method::Lfire}, {"synthlik", Method::SyntheticLikelihood}}) {
          if (!mc.has(name)) continue;
          const fs::path rel = posterior_path(name, i);
          if (mc.on_grid()) {
            write_grid_csv(ctx.out / rel, grid_from_nodes(model, axes, f.results, method, psi0, phi0),
                           model.parameter_names);
          } else {
            const WeightedSample ws = sample_from_nodes(model, f.nodes, f.results, method, psi0, phi0);
            ess[std::string(name) + "_" + index_tag(i)] = ws.ess;
            write_sample_csv(ctx.out / rel, ws, model.parameter_names);
          }
          artifacts.push_back(rel.generic_string());
        }
      }

      if (mc.has("abc")) {
        watch.stage("abc");
        std::optional<AbcTable> local;
        if (!reuse || !shared_abc) {
          AbcTable t = build_abc_table(ctx, model, map, seed);
          if (reuse) {
            shared_abc = std::move(t);
          } else {
            local = std::move(t);
          }
        }
        const AbcTable& t = reuse ? *shared_abc : *local;
        AbcOptions opt;
        opt.n_sims = mc.abc_sims;
        opt.rate = mc.abc_rate;
        opt.threshold = mc.abc_threshold;
        opt.max_redraws = mc.max_redraws;
        const AbcResult r = abc_select(t.thetas, t.stats, map.base_statistics(x0), opt);
        const fs::path rel = posterior_path("abc", i);
        write_sample_csv(ctx.out / rel, uniform_sample(r.accepted), model.parameter_names);
        artifacts.push_back(rel.generic_string());
      }

      if (mc.has("exact")) {
        watch.stage("exact");
        GridPosterior gp;
        if (const auto* g = std::get_if<GaussianModelSpec>(&c.simulator)) {
          gp = gaussian_true_posterior(x0(0, 0), *g, axes[0]).posterior;
        } else {
          gp = arch_true_posterior(x0.row(0).transpose(), axes, std::get<ArchModelSpec>(c.simulator), mc.gh_order);
        }
        const fs::path rel = posterior_path("exact", i);
        write_grid_csv(ctx.out / rel, gp, model.parameter_names);
        artifacts.push_back(rel.generic_string());
      }
      return 0;
    });
  }
  json extra = {{"datasets", ids}, {"fields", fields}};
  if (!ess.empty()) extra["ess"] = ess;
  write_manifest(ctx, "infer", artifacts, extra, watch);
  return artifacts;
}

// compare --------------------------------------------------------------------

namespace {

struct Deltas {
  std::string quantity;
  std::string parameter;
  std::vector<double> values;
};

json wilcoxon_row(const Deltas& d) {
  Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(d.values.data(), static_cast<Eigen::Index>(d.values.size()));
  int neg = 0;
  for (double x : d.values) neg += x < 0;
  json row = {{"n", d.values.size()},
              {"fraction_negative", d.values.empty() ? 0.0 : static_cast<double>(neg) / d.values.size()}};
  bool all_zero = true;
  for (double x : d.values) all_zero = all_zero && x == 0.0;
  if (all_zero) {
    row["statistic"] = 0.0;
    row["p_value"] = 1.0;
    row["exact"] = true;
  } else {
    const WilcoxonResult w = wilcoxon_signed_rank(v);
    row["statistic"] = w.statistic;
    row["p_value"] = w.p_value;
    row["exact"] = w.exact;
  }
  return row;
}

}  // namespace

std::vector<std::string> cmd_compare(const RunContext& ctx, const std::string& a, const std::string& b) {
  const ExperimentConfig& c = ctx.config;
  Stopwatch watch;
  watch.stage("load");
  const Model model = make_model(c.simulator, c.summary);
  const std::vector<std::string>& names = model.parameter_names;
  const std::size_t dim = names.size();
  const std::vector<int> ids = c.datasets();
  std::vector<std::string> estimators;
  for (const auto& m : c.method.names) {
    if (m != "exact") estimators.push_back(m);
  }
  const bool has_exact = c.method.has("exact");
  const std::string reference = has_exact ? "exact" : (c.method.has("abc") ? "abc" : "");
  const bool pair = c.method.has(a) && c.method.has(b);

  TextTable moments{{"dataset", "method", "parameter", "mean", "std"}, {}};
  TextTable skl_table{{"dataset", "method", "skl"}, {}};
  TextTable rel_table{{"dataset", "method", "parameter", "rel_error_mean", "rel_error_std"}, {}};
  TextTable delta_table{{"dataset", "quantity", "parameter", "delta"}, {}};
  std::map<std::string, std::vector<double>> skl_by_method;
  std::vector<Deltas> deltas;
  auto delta_slot = [&](const std::string& q, const std::string& p) -> std::vector<double>& {
    for (auto& d : deltas) {
      if (d.quantity == q && d.parameter == p) return d.values;
    }
    deltas.push_back({q, p, {}});
    return deltas.back().values;
  };

  watch.stage("metrics");
  for (int i : ids) {
    with_dataset(i, [&] {
      std::map<std::string, Artifact> art;
      std::map<std::string, Moments> mom;
      for (const auto& m : c.method.names) {
        art[m] = read_artifact(ctx.out / posterior_path(m, i), dim);
        mom[m] = art[m].moments();
        for (std::size_t k = 0; k < dim; ++k) {
          moments.rows.push_back({std::to_string(i), m, names[k], format_double(mom[m].mean[static_cast<Eigen::Index>(k)]),
                                  format_double(mom[m].std[static_cast<Eigen::Index>(k)])});
        }
      }
      std::map<std::string, double> skl_of;
      if (has_exact) {
        for (const auto& m : estimators) {
          if (!art[m].grid) continue;
          const double s = skl(art[m].posterior, art["exact"].posterior);
          skl_of[m] = s;
          skl_by_method[m].push_back(s);
          skl_table.rows.push_back({std::to_string(i), m, format_double(s)});
        }
      }
      std::map<std::string, std::pair<Eigen::VectorXd, Eigen::VectorXd>> rel;
      if (!reference.empty()) {
        for (const auto& m : estimators) {
          if (m == reference) continue;
          const Eigen::VectorXd rm = relative_error(mom[m].mean, mom[reference].mean);
          const Eigen::VectorXd rs = relative_error(mom[m].std, mom[reference].std);
          rel[m] = {rm, rs};
          for (std::size_t k = 0; k < dim; ++k) {
            const auto kk = static_cast<Eigen::Index>(k);
            rel_table.rows.push_back({std::to_string(i), m, names[k], format_double(rm[kk]), format_double(rs[kk])});
          }
        }
      }
      if (pair) {
        auto add = [&](const std::string& q, const std::string& p, double v) {
          delta_slot(q, p).push_back(v);
          delta_table.rows.push_back({std::to_string(i), q, p, format_double(v)});
        };
        if (skl_of.count(a) && skl_of.count(b)) add("skl", "all", skl_of[a] - skl_of[b]);
        if (rel.count(a) && rel.count(b)) {
          const Eigen::VectorXd dm = delta_rel_error(rel[a].first, rel[b].first);
          const Eigen::VectorXd ds = delta_rel_error(rel[a].second, rel[b].second);
          for (std::size_t k = 0; k < dim; ++k) add("rel_error_mean", names[k], dm[static_cast<Eigen::Index>(k)]);
          for (std::size_t k = 0; k < dim; ++k) add("rel_error_std", names[k], ds[static_cast<Eigen::Index>(k)]);
        }
      }
      return 0;
    });
  }

  watch.stage("tables");
  TextTable summary{{"method", "n_s", "datasets", "mean_skl"}, {}};
  for (const auto& m : estimators) {
    if (!skl_by_method.count(m)) continue;
    const auto& v = skl_by_method[m];
    double mean = 0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    const bool nodes = m == "lfire" || m == "synthlik";
    summary.rows.push_back(
        {m, nodes ? std::to_string(c.method.n_theta) : "", std::to_string(v.size()), format_double(mean)});
  }
  TextTable wil{{"quantity", "parameter", "n", "fraction_negative", "statistic", "p_value", "exact"}, {}};
  TextTable bands{{"quantity", "parameter", "median", "q25", "q75"}, {}};
  for (const auto& d : deltas) {
    const json w = wilcoxon_row(d);
    wil.rows.push_back({d.quantity, d.parameter, std::to_string(w["n"].get<int>()),
                        format_double(w["fraction_negative"].get<double>()), format_double(w["statistic"].get<double>()),
                        format_double(w["p_value"].get<double>()), w["exact"].get<bool>() ? "1" : "0"});
    Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(d.values.data(), static_cast<Eigen::Index>(d.values.size()));
    bands.rows.push_back({d.quantity, d.parameter, format_double(quantile(v, 0.5)), format_double(quantile(v, 0.25)),
                          format_double(quantile(v, 0.75))});
  }

  std::vector<std::string> artifacts;
  auto emit = [&](const std::string& file, const TextTable& t) {
    const fs::path rel = fs::path("compare") / file;
    write_text_table_csv(ctx.out / rel, t);
    artifacts.push_back(rel.generic_string());
  };
  emit("moments.csv", moments);
  if (has_exact) {
    emit("skl.csv", skl_table);
    emit("table.csv", summary);
  }
  if (!reference.empty()) emit("rel_error.csv", rel_table);
  if (pair) {
    emit("delta.csv", delta_table);
    emit("wilcoxon.csv", wil);
    emit("bands.csv", bands);
  }
  write_manifest(ctx, "compare", artifacts, {{"a", a}, {"b", b}, {"reference", reference}}, watch);
  return artifacts;
}

// forecast -------------------------------------------------------------------

Eigen::VectorXd forecast_zeta(const LorenzModelSpec& spec, const Dataset& x0, const Eigen::VectorXd& theta0,
                              const Eigen::VectorXd& lfire_mean, const Eigen::VectorXd& sl_mean, int steps,
                              std::uint64_t seed, int dataset) {
  const Eigen::VectorXd start = x0.col(x0.cols() - 1);
  const Rng noise = stream_rng(seed, StreamTag::Forecast, static_cast<std::uint64_t>(dataset));
  auto run = [&](const Eigen::VectorXd& th) {
    Rng rng = noise;
    return continue_lorenz(spec, th[0], th[1], start, steps, rng);
  };
  const Eigen::MatrixXd y = run(theta0);
  const Eigen::MatrixXd yh = run(lfire_mean);
  const Eigen::MatrixXd ys = run(sl_mean);
  return forecast_gain(y.rightCols(steps), yh.rightCols(steps), ys.rightCols(steps));
}

std::vector<std::string> cmd_forecast(const RunContext& ctx) {
  const ExperimentConfig& c = ctx.config;
  const auto* spec = std::get_if<LorenzModelSpec>(&c.simulator);
  if (spec == nullptr) throw ConfigError("forecast needs the lorenz model");
  if (!c.method.has("lfire") || !c.method.has("synthlik")) throw ConfigError("forecast needs lfire and synthlik posteriors");
  Stopwatch watch;
  watch.stage("forecast");
  const int steps = c.forecast_steps;
  const std::vector<int> ids = c.datasets();
  Eigen::MatrixXd zeta(static_cast<Eigen::Index>(ids.size()), steps);
  TextTable means{{"dataset", "method", "parameter", "mean"}, {}};
  const auto names = parameter_names(c.simulator);
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const int i = ids[k];
    with_dataset(i, [&] {
      const Dataset x0 = load_dataset(ctx, i);
      const Eigen::VectorXd ml = read_artifact(ctx.out / posterior_path("lfire", i), 2).moments().mean;
      const Eigen::VectorXd ms = read_artifact(ctx.out / posterior_path("synthlik", i), 2).moments().mean;
      for (const auto& [m, v] : {std::pair{"lfire", ml}, {"synthlik", ms}}) {
        for (std::size_t p = 0; p < 2; ++p) {
          means.rows.push_back({std::to_string(i), m, names[p], format_double(v[static_cast<Eigen::Index>(p)])});
        }
      }
      zeta.row(static_cast<Eigen::Index>(k)) = forecast_zeta(*spec, x0, c.theta0, ml, ms, steps, c.seed, i).transpose();
      return 0;
    });
  }
  const double t_end = spec->T * spec->dt;
  TextTable per{{"dataset", "t", "zeta"}, {}};
  for (std::size_t k = 0; k < ids.size(); ++k) {
    for (int s = 0; s < steps; ++s) {
      per.rows.push_back({std::to_string(ids[k]), format_double(t_end + (s + 1) * spec->dt),
                          format_double(zeta(static_cast<Eigen::Index>(k), s))});
    }
  }
  TextTable band{{"t", "median", "q25", "q75"}, {}};
  if (!ids.empty()) {
    const QuantileBand q = quantile_band(zeta);
    for (int s = 0; s < steps; ++s) {
      band.rows.push_back({format_double(t_end + (s + 1) * spec->dt), format_double(q.median[s]),
                           format_double(q.q25[s]), format_double(q.q75[s])});
    }
  }
  std::vector<std::string> artifacts;
  for (const auto& [file, t] : {std::pair{"means.csv", &means}, {"zeta.csv", &per}, {"bands.csv", &band}}) {
    const fs::path rel = fs::path("forecast") / file;
    write_text_table_csv(ctx.out / rel, *t);
    artifacts.push_back(rel.generic_string());
  }
  write_manifest(ctx, "forecast", artifacts, json::object(), watch);
  return artifacts;
}

}  // namespace lfire
