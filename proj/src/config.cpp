#include "bop/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "bop/errors.hpp"
#include "bop/prices.hpp"

namespace bop {

namespace {

using json = nlohmann::json;

[[noreturn]] void bad(const std::string& field, const std::string& what) {
  throw ConfigError("config: " + field + ": " + what);
}

// Object reader that remembers which keys were consumed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) bad(path_.empty() ? "<root>" : path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  Section child(const std::string& key) { return Section(raw(key), field(key)); }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (has(key)) out = convert<T>(raw(key), field(key));
  }

  // Scalar or array accepted.
  template <typename T>
  void read_list(const std::string& key, std::vector<T>& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    out.clear();
    if (v.is_array()) {
      if (v.empty()) bad(field(key), "expected a nonempty list");
      for (std::size_t i = 0; i < v.size(); ++i) out.push_back(convert<T>(v[i], field(key) + "[" + std::to_string(i) + "]"));
    } else {
      out.push_back(convert<T>(v, field(key)));
    }
  }

  void read_matrix(const std::string& key, Matrix& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    const std::string f = field(key);
    if (!v.is_array() || v.empty()) bad(f, "expected a square array of rows");
    const auto n = static_cast<Eigen::Index>(v.size());
    out.resize(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
      const json& row = v[static_cast<std::size_t>(r)];
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) bad(f, "expected a square array of rows");
      for (Eigen::Index c = 0; c < n; ++c) out(r, c) = convert<double>(row[static_cast<std::size_t>(c)], f);
    }
  }

  void read_vector(const std::string& key, Vector& out) {
    if (!has(key)) return;
    std::vector<double> v;
    read_list(key, v);
    out = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!used_.count(key)) bad(field(key), "unknown field");
    }
  }

 private:
  template <typename T>
  static T convert(const json& v, const std::string& f) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) bad(f, "expected true or false");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) bad(f, "expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      if (!v.is_number_unsigned()) bad(f, "expected a non-negative integer");
      return v.get<std::uint64_t>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) bad(f, "expected an integer");
      return v.get<T>();
    } else {
      if (!v.is_number()) bad(f, "expected a number");
      return v.get<T>();
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) bad(field, what);
}

void check_date(const std::string& d, const std::string& field) {
  require(d.empty() || is_iso_date(d), field, "expected an ISO date YYYY-MM-DD");
}

std::string resolve(const std::string& base, const std::string& p) {
  if (p.empty()) return p;
  const std::filesystem::path path(p);
  return path.is_absolute() ? p : (std::filesystem::path(base) / path).lexically_normal().string();
}

Statistic parse_statistic(const std::string& s, const std::string& field) {
  if (s == "S") return Statistic::S;
  if (s == "S_tilde") return Statistic::STilde;
  bad(field, "expected S or S_tilde");
}

void read_market(Section& s, MarketParams& m) {
  if (!s.has("market")) return;
  Section c = s.child("market");
  c.read("alpha_sd", m.alpha_sd);
  c.read("beta_sd", m.beta_sd);
  c.read("market_mean", m.market_mean);
  c.read("market_sd", m.market_sd);
  c.read("factor_sd", m.factor_sd);
  c.finish();
  require(m.alpha_sd >= 0 && m.beta_sd >= 0 && m.market_sd >= 0 && m.factor_sd >= 0, s.field("market"),
          "standard deviations must be non-negative");
}

void read_simulate(Section s, SimulateSettings& out, bool keep_experiment) {
  int experiment = out.experiment;
  s.read("experiment", experiment);
  if (!keep_experiment) out.experiment = experiment;
  require(out.experiment >= 1 && out.experiment <= 4, s.field("experiment"), "expected 1, 2, 3 or 4");
  switch (out.experiment) {
    case 1: {
      auto& e = out.e1;
      s.read_list("P", e.P);
      s.read_list("n", e.n);
      s.read_list("sigma", e.sigma);
      s.read_list("p", e.p);
      s.read("replicates", e.replicates);
      s.read("known_sigma", e.known_sigma);
      s.read_matrix("lambda0", e.lambda0);
      read_market(s, e.market);
      break;
    }
    case 2: {
      auto& e = out.e2;
      s.read("P", e.P);
      s.read("n", e.n);
      s.read("sigma", e.sigma);
      s.read_list("p", e.p);
      s.read("significance", e.significance);
      s.read("replicates", e.replicates);
      s.read("known_sigma", e.known_sigma);
      s.read_matrix("lambda0", e.lambda0);
      read_market(s, e.market);
      break;
    }
    case 3: {
      auto& e = out.e3;
      s.read("P", e.P);
      s.read("q", e.q);
      s.read_list("p_tilde", e.p_tilde);
      s.read_list("sigma", e.sigma);
      s.read("n_train", e.n_train);
      s.read("n_test", e.n_test);
      s.read("replicates", e.replicates);
      s.read("known_sigma", e.known_sigma);
      s.read_matrix("lambda0", e.lambda0);
      read_market(s, e.market);
      break;
    }
    case 4: {
      auto& e = out.e4;
      s.read_list("k", e.k);
      s.read_list("P", e.P);
      s.read_list("n", e.n);
      s.read_list("p_tilde", e.p_tilde);
      s.read("q", e.q);
      s.read_list("sigma", e.sigma);
      s.read("replicates", e.replicates);
      s.read("known_sigma", e.known_sigma);
      read_market(s, e.market);
      break;
    }
  }
  s.finish();
}

void read_loss(Section& s, LossSpec& loss) {
  s.read("delta0", loss.delta0);
  s.read("deltaA", loss.deltaA);
  require(loss.delta0 > 0 && loss.deltaA > 0, s.field("delta0"), "losses must be positive");
}

void read_spike_slab(Section& s, double& p, Matrix& lambda0, LossSpec& loss, Statistic& stat) {
  s.read("p", p);
  require(p > 0.0 && p < 1.0, s.field("p"), "expected 0 < p < 1");
  s.read_matrix("lambda0", lambda0);
  read_loss(s, loss);
  if (s.has("statistic")) {
    std::string v;
    s.read("statistic", v);
    stat = parse_statistic(v, s.field("statistic"));
  }
}

void read_chain(Section& s, ChainOptions& c) {
  s.read("iterations", c.iterations);
  s.read("burn_in", c.burn_in);
  s.read("stride", c.stride);
  s.read("proposal_scale", c.proposal_scale);
  s.read("target_accept", c.target_accept);
  require(c.burn_in >= 0 && c.iterations > c.burn_in, s.field("iterations"), "must exceed burn_in");
  require(c.stride >= 1, s.field("stride"), "must be at least 1");
  require(c.proposal_scale > 0.0, s.field("proposal_scale"), "must be positive");
  require(c.target_accept > 0.0 && c.target_accept < 1.0, s.field("target_accept"), "expected (0, 1)");
}

// Any prior field starts from the defaults for k and overrides them.
void read_hb_prior(Section& s, int k, HBPrior& prior) {
  bool custom = false;
  for (const char* key : {"nu0", "rho", "R", "C", "mu0"}) custom |= s.has(key);
  if (!custom) return;
  prior = HBPrior::defaults(k);
  s.read("nu0", prior.nu0);
  s.read("rho", prior.rho);
  s.read_matrix("R", prior.R);
  s.read_matrix("C", prior.C);
  s.read_vector("mu0", prior.mu0);
  try {
    prior.validate();
  } catch (const ConfigError& e) {
    bad(s.field("prior"), e.what());
  }
  if (prior.mu0.size() != k + 1) bad(s.field("mu0"), "expected " + std::to_string(k + 1) + " entries");
}

void read_window(Section& s, std::string& start, std::string& end) {
  s.read("start", start);
  s.read("end", end);
  check_date(start, s.field("start"));
  check_date(end, s.field("end"));
  require(start.empty() || end.empty() || start <= end, s.field("start"), "must not follow end");
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& base_dir,
                       const ConfigOverrides& overrides) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: not valid JSON: ") + e.what());
  }
  RunConfig cfg;
  Section top(root, "");
  top.read("seed", cfg.seed);
  if (overrides.seed) cfg.seed = *overrides.seed;
  if (overrides.experiment) cfg.simulate.experiment = *overrides.experiment;

  if (top.has("data")) {
    Section d = top.child("data");
    d.read("prices", cfg.data.prices);
    d.read("benchmark", cfg.data.benchmark);
    d.read_list("factors", cfg.data.factors);
    d.read("risk_free", cfg.data.risk_free);
    d.finish();
    cfg.data.prices = resolve(base_dir, cfg.data.prices);
    cfg.data.benchmark = resolve(base_dir, cfg.data.benchmark);
    cfg.data.risk_free = resolve(base_dir, cfg.data.risk_free);
    for (auto& f : cfg.data.factors) f = resolve(base_dir, f);
  }

  if (top.has("simulate")) read_simulate(top.child("simulate"), cfg.simulate, overrides.experiment.has_value());
  require(cfg.simulate.experiment >= 1 && cfg.simulate.experiment <= 4, "simulate.experiment",
          "expected 1, 2, 3 or 4");
  cfg.simulate.e1.seed = cfg.simulate.e2.seed = cfg.simulate.e3.seed = cfg.simulate.e4.seed = cfg.seed;

  if (top.has("test")) {
    Section t = top.child("test");
    t.read("k", cfg.test.k);
    require(cfg.test.k >= 1, t.field("k"), "must be at least 1");
    read_window(t, cfg.test.start, cfg.test.end);
    read_spike_slab(t, cfg.test.p, cfg.test.lambda0, cfg.test.loss, cfg.test.statistic);
    t.finish();
  }

  if (top.has("hb")) {
    Section h = top.child("hb");
    h.read("k", cfg.hb.k);
    require(cfg.hb.k >= 1, h.field("k"), "must be at least 1");
    read_window(h, cfg.hb.start, cfg.hb.end);
    h.read("p_tilde", cfg.hb.p_tilde);
    require(cfg.hb.p_tilde >= 1, h.field("p_tilde"), "must be at least 1");
    read_chain(h, cfg.hb.chain);
    read_hb_prior(h, cfg.hb.k, cfg.hb.prior);
    h.finish();
  }
  cfg.hb.chain.seed = derive_seed(cfg.seed, "hb_fit");

  auto& sel = cfg.backtest.selector;
  if (top.has("backtest")) {
    Section b = top.child("backtest");
    if (b.has("selectors")) {
      std::vector<std::string> names;
      b.read_list("selectors", names);
      cfg.backtest.selectors.clear();
      for (const auto& n : names) {
        try {
          cfg.backtest.selectors.push_back(parse_selector(n));
        } catch (const ConfigError&) {
          bad(b.field("selectors"), "unknown selector '" + n + "' (expected oracle, hb, ftest or market)");
        }
      }
    }
    b.read("p_tilde", sel.p_tilde);
    require(sel.p_tilde >= 1, b.field("p_tilde"), "must be at least 1");
    b.read("factors", sel.factors);
    require(sel.factors >= -1, b.field("factors"), "expected -1 (all) or a count");
    read_spike_slab(b, sel.p, sel.lambda0, sel.loss, sel.statistic);
    b.read("significance", sel.significance);
    require(sel.significance > 0.0 && sel.significance < 1.0, b.field("significance"), "expected (0, 1)");
    b.read("positive_alpha_first", sel.positive_alpha_first);
    read_window(b, cfg.backtest.start, cfg.backtest.end);
    if (b.has("hb")) {
      Section h = b.child("hb");
      read_chain(h, sel.chain);
      read_hb_prior(h, sel.factors >= 0 ? sel.factors + 1 : static_cast<int>(cfg.data.factors.size()) + 1,
                    sel.hb_prior);
      h.finish();
    }
    b.finish();
  }
  sel.seed = derive_seed(cfg.seed, "backtest");
  if (!overrides.selectors.empty()) {
    cfg.backtest.selectors.clear();
    for (const auto& n : overrides.selectors) cfg.backtest.selectors.push_back(parse_selector(n));
  }

  if (top.has("report")) {
    Section r = top.child("report");
    r.read("var_confidence", cfg.report.var_confidence);
    require(cfg.report.var_confidence > 0.0 && cfg.report.var_confidence < 1.0, r.field("var_confidence"),
            "expected (0, 1)");
    r.read("periods_per_year", cfg.report.periods_per_year);
    require(cfg.report.periods_per_year > 0.0, r.field("periods_per_year"), "must be positive");
    r.read("min_var_obs", cfg.report.min_var_obs);
    require(cfg.report.min_var_obs >= 1, r.field("min_var_obs"), "must be at least 1");
    r.finish();
  }
  top.finish();
  cfg.snapshot = root.dump(2);
  return cfg;
}

RunConfig load_config(const std::string& path, const ConfigOverrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const auto base = std::filesystem::path(path).parent_path().string();
  return parse_config(ss.str(), base.empty() ? "." : base, overrides);
}

}  // namespace bop
