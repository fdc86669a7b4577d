#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "implreg/errors.hpp"
#include "implreg/experiment.hpp"

namespace implreg::cli {

ConfigError::ConfigError(std::vector<std::string> diagnostics)
    : std::runtime_error(diagnostics.empty() ? "invalid config" : diagnostics.front()),
      diagnostics_(std::move(diagnostics)) {}

AnalysisError::AnalysisError(std::string analysis, const std::string& message)
    : std::runtime_error(analysis + ": " + message), analysis_(std::move(analysis)) {}

std::vector<std::uint64_t> ExperimentConfig::seeds() const {
  std::vector<std::uint64_t> out;
  for (int k = 0; k < n_seeds; ++k) out.push_back(seed + static_cast<std::uint64_t>(k));
  return out;
}

namespace {

using Diag = std::vector<std::string>;

// Walks one JSON object, records which keys were read, and reports the rest.
class Obj {
 public:
  Obj(const json* j, std::string path, Diag& diag) : j_(j), path_(std::move(path)), diag_(diag) {
    if (j_ && !j_->is_object()) {
      error("", "expected an object");
      j_ = nullptr;
    }
  }

  bool has(const std::string& key) const { return j_ && j_->contains(key); }

  double number(const std::string& key, double def, double lo = -INFINITY, double hi = INFINITY,
                bool open_lo = false) {
    const json* v = get(key);
    if (!v) return def;
    if (!v->is_number()) return error(key, "expected a number"), def;
    const double x = v->get<double>();
    if (!std::isfinite(x) || x < lo || x > hi || (open_lo && x == lo)) {
      std::ostringstream m;
      m << "value " << x << " out of range " << (open_lo ? "(" : "[") << lo << ", " << hi << "]";
      return error(key, m.str()), def;
    }
    return x;
  }

  std::int64_t integer(const std::string& key, std::int64_t def, std::int64_t lo,
                       std::int64_t hi = std::numeric_limits<std::int64_t>::max()) {
    const json* v = get(key);
    if (!v) return def;
    if (!v->is_number_integer()) return error(key, "expected an integer"), def;
    const std::int64_t x = v->get<std::int64_t>();
    if (x < lo || x > hi) {
      return error(key, "value " + std::to_string(x) + " out of range [" + std::to_string(lo) +
                            ", " + std::to_string(hi) + "]"),
             def;
    }
    return x;
  }

  bool boolean(const std::string& key, bool def) {
    const json* v = get(key);
    if (!v) return def;
    if (!v->is_boolean()) return error(key, "expected true or false"), def;
    return v->get<bool>();
  }

  std::string string(const std::string& key, const std::string& def) {
    const json* v = get(key);
    if (!v) return def;
    if (!v->is_string()) return error(key, "expected a string"), def;
    return v->get<std::string>();
  }

  Obj object(const std::string& key) { return Obj(get(key), field(key), diag_); }
  const json* raw(const std::string& key) { return get(key); }

  void error(const std::string& key, const std::string& msg) {
    diag_.push_back("field '" + field(key) + "': " + msg);
  }

  std::string field(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  // Call last: flags every key that no getter asked for.
  void finish() {
    if (!j_) return;
    for (auto it = j_->begin(); it != j_->end(); ++it)
      if (!used_.count(it.key())) error(it.key(), "unknown key");
  }

 private:
  const json* get(const std::string& key) {
    used_.insert(key);
    if (!j_) return nullptr;
    auto it = j_->find(key);
    if (it == j_->end() || it->is_null()) return nullptr;
    return &*it;
  }

  const json* j_;
  std::string path_;
  Diag& diag_;
  std::set<std::string> used_;
};

Dataset parse_points(const json& pts, const std::string& path, Diag& diag) {
  Dataset d;
  if (!pts.is_array() || pts.empty()) {
    diag.push_back("field '" + path + "': expected a nonempty array of {x, y}");
    return d;
  }
  for (std::size_t i = 0; i < pts.size(); ++i) {
    Obj p(&pts[i], path + "[" + std::to_string(i) + "]", diag);
    DataPoint dp;
    const json* x = p.raw("x");
    if (!x) {
      p.error("x", "missing");
    } else if (x->is_number()) {
      dp.x = {x->get<double>()};
    } else if (x->is_array() && !x->empty()) {
      for (const json& v : *x) {
        if (!v.is_number()) {
          p.error("x", "expected numbers");
          break;
        }
        dp.x.push_back(v.get<double>());
      }
    } else {
      p.error("x", "expected a number or an array of numbers");
    }
    if (!p.has("y")) p.error("y", "missing");
    dp.y = p.number("y", 0.0);
    p.finish();
    d.points.push_back(std::move(dp));
  }
  return d;
}

NoiseModel parse_noise(Obj o) {
  NoiseModel n;
  const std::string kind = o.string("kind", "rademacher");
  try {
    n.kind = noise_kind_from_string(kind);
  } catch (const Error&) {
    o.error("kind", "unknown noise kind '" + kind + "' (none, rademacher, gaussian, uniform)");
  }
  n.scale = o.number("scale", 1.0, 0.0);
  o.finish();
  return n;
}

}  // namespace

ExperimentConfig config_from_json(const json& input) {
  Diag diag;
  const json* root = &input;
  // a manifest carries the config it ran with
  if (input.is_object() && input.contains("manifest_version") && input.contains("config"))
    root = &input["config"];

  ExperimentConfig c;
  Obj o(root, "", diag);
  if (!o.has("schema_version"))
    o.error("schema_version", "missing");
  else
    c.schema_version =
        static_cast<int>(o.integer("schema_version", kSchemaVersion, kSchemaVersion, kSchemaVersion));
  c.experiment = o.string("experiment", "custom");
  c.description = o.string("description", "");
  c.seed = static_cast<std::uint64_t>(o.integer("seed", 0, 0));
  c.n_seeds = static_cast<int>(o.integer("n_seeds", 1, 1, 10000));
  c.output_dir = o.string("output_dir", "runs/" + c.experiment);
  if (c.output_dir.empty()) o.error("output_dir", "must not be empty");

  {
    Obj a = o.object("architecture");
    if (!o.has("architecture")) o.error("architecture", "missing");
    c.arch.input_dim = static_cast<std::size_t>(a.integer("input_dim", 1, 1, 1000));
    c.arch.hidden_width = static_cast<std::size_t>(a.integer("hidden_width", 1, 0, 100000));
    const std::string act = a.string("activation", "relu");
    try {
      c.arch.activation = activation_from_string(act);
    } catch (const Error&) {
      a.error("activation", "unknown activation '" + act + "' (relu, tanh, logistic, identity)");
    }
    c.arch.skip_linear_and_bias = a.boolean("skip", false);
    a.finish();
  }

  {
    Obj d = o.object("dataset");
    if (!o.has("dataset")) o.error("dataset", "missing");
    const bool has_builtin = d.has("builtin"), has_points = d.has("points");
    if (has_builtin == has_points && o.has("dataset"))
      d.error("", "give exactly one of 'builtin' and 'points'");
    c.dataset.builtin = d.string("builtin", "");
    if (has_builtin) {
      bool known = false;
      for (const auto& g : builtins::generators()) known = known || g.name == c.dataset.builtin;
      if (!known) d.error("builtin", "unknown builtin dataset '" + c.dataset.builtin + "'");
    }
    Obj p = d.object("params");
    if (d.has("params") && !has_builtin) d.error("params", "only valid with 'builtin'");
    c.dataset.params.input_scale = p.number("input_scale", 1.0, 0.0, INFINITY, true);
    c.dataset.params.n = static_cast<std::size_t>(p.integer("n", 4, 1, 100000));
    c.dataset.params.d = static_cast<std::size_t>(p.integer("d", 2, 1, 1000));
    c.dataset.params.delta = p.number("delta", 0.5, 0.0);
    c.dataset.params.base = p.string("base", "fig1d");
    p.finish();
    if (const json* pts = d.raw("points")) {
      c.dataset.points = parse_points(*pts, d.field("points"), diag);
      for (const DataPoint& dp : c.dataset.points.points)
        if (dp.x.size() != c.arch.input_dim) {
          d.error("points", "every x must have input_dim = " + std::to_string(c.arch.input_dim) +
                                " entries");
          break;
        }
    }
    d.finish();
  }

  {
    Obj i = o.object("init");
    c.init.scale = i.number("scale", 1.0, 0.0, INFINITY, true);
    c.init.shared = i.boolean("shared", false);
    c.init.pretrain = i.boolean("pretrain", false);
    c.init.pretrain_tol = i.number("pretrain_tol", 1e-6, 0.0, INFINITY, true);
    i.finish();
  }

  {
    Obj t = o.object("train");
    const std::string mode = t.string("mode", "fixed");
    if (mode == "fixed")
      c.train.mode = TrainMode::Fixed;
    else if (mode == "until_stable")
      c.train.mode = TrainMode::UntilStable;
    else
      t.error("mode", "expected 'fixed' or 'until_stable'");
    c.train.eta = t.number("eta", 1e-3, 0.0, 1.0, true);
    if (c.train.eta >= 1.0) t.error("eta", "must be below 1");
    c.train.steps = t.integer("steps", 1000, 1);
    c.train.snapshot_stride = t.integer("snapshot_stride", 100, 1);
    c.train.noise = parse_noise(t.object("noise"));
    Obj s = t.object("stable");
    if (t.has("stable") && c.train.mode != TrainMode::UntilStable)
      t.error("stable", "only valid with mode 'until_stable'");
    StableTrainingOptions& so = c.train.stable;
    so.warm_steps = s.integer("warm_steps", so.warm_steps, 1);
    so.phase_steps = s.integer("phase_steps", so.phase_steps, 1);
    so.decay = s.number("decay", so.decay, 0.0, 1.0, true);
    so.window = s.integer("window", so.window, 1);
    so.tolerance = s.number("tolerance", so.tolerance, 0.0, INFINITY, true);
    so.patience = static_cast<int>(s.integer("patience", so.patience, 1, 1000));
    so.max_steps = s.integer("max_steps", so.max_steps, 1);
    s.finish();
    if (c.train.mode == TrainMode::UntilStable && c.train.snapshot_stride % so.window != 0)
      t.error("snapshot_stride", "must be a multiple of stable.window (" +
                                     std::to_string(so.window) + ")");
    c.train.polish = t.boolean("polish", false);
    c.train.polish_tol = t.number("polish_tol", 1e-6, 0.0, INFINITY, true);
    c.train.control = t.boolean("control", false);
    c.train.control_tol = t.number("control_tol", 1e-6, 0.0, INFINITY, true);
    t.finish();
  }

  {
    Obj a = o.object("analyses");
    AnalysisSection& s = c.analyses;
    s.spectrum = a.boolean("spectrum", false);
    s.ou = a.boolean("ou", false);
    s.drift = a.boolean("drift", false);
    s.geometry = a.boolean("geometry", false);
    s.single_point = a.boolean("single_point", false);
    s.tol_abs = a.number("tol_abs", s.tol_abs, 0.0);
    s.tol_rel = a.number("tol_rel", s.tol_rel, 0.0);
    s.zero_error_tol = a.number("zero_error_tol", s.zero_error_tol, 0.0, INFINITY, true);
    s.ou_min_gamma_rel = a.number("ou_min_gamma_rel", s.ou_min_gamma_rel, 0.0, 1.0);
    s.drift_seeds = static_cast<int>(a.integer("drift_seeds", s.drift_seeds, 2, 100000));
    if (a.has("drift_horizon")) s.drift_horizon = a.integer("drift_horizon", 1, 1);
    s.line_tol_rel = a.number("line_tol_rel", s.line_tol_rel, 0.0, INFINITY, true);
    s.cluster_tol = a.number("cluster_tol", s.cluster_tol, 0.0, INFINITY, true);
    if ((s.ou || s.drift) && !(c.init.pretrain && c.init.shared))
      a.error(s.ou ? "ou" : "drift", "needs init.pretrain and init.shared");
    if (s.ou && c.train.mode != TrainMode::Fixed) a.error("ou", "needs train.mode 'fixed'");
    if (s.geometry && !(c.arch.input_dim == 1 && c.arch.activation == Activation::Relu))
      a.error("geometry", "needs a 1-d relu architecture");
    if (s.single_point &&
        !(c.arch.activation == Activation::Logistic || c.arch.activation == Activation::Tanh))
      a.error("single_point", "needs a logistic or tanh architecture");
    a.finish();
  }
  o.finish();
  if (!diag.empty()) throw ConfigError(std::move(diag));
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json dataset;
  if (!c.dataset.builtin.empty()) {
    const auto& p = c.dataset.params;
    dataset = {{"builtin", c.dataset.builtin},
               {"params",
                {{"input_scale", p.input_scale},
                 {"n", p.n},
                 {"d", p.d},
                 {"delta", p.delta},
                 {"base", p.base}}}};
  } else {
    json pts = json::array();
    for (const DataPoint& dp : c.dataset.points.points) pts.push_back({{"x", dp.x}, {"y", dp.y}});
    dataset = {{"points", pts}};
  }
  json train = {{"mode", c.train.mode == TrainMode::Fixed ? "fixed" : "until_stable"},
                {"eta", c.train.eta},
                {"steps", c.train.steps},
                {"snapshot_stride", c.train.snapshot_stride},
                {"noise",
                 {{"kind", std::string(to_string(c.train.noise.kind))},
                  {"scale", c.train.noise.scale}}},
                {"polish", c.train.polish},
                {"polish_tol", c.train.polish_tol},
                {"control", c.train.control},
                {"control_tol", c.train.control_tol}};
  if (c.train.mode == TrainMode::UntilStable) {
    const auto& s = c.train.stable;
    train["stable"] = {{"warm_steps", s.warm_steps}, {"phase_steps", s.phase_steps},
                       {"decay", s.decay},           {"window", s.window},
                       {"tolerance", s.tolerance},   {"patience", s.patience},
                       {"max_steps", s.max_steps}};
  }
  const auto& a = c.analyses;
  json analyses = {{"spectrum", a.spectrum},
                   {"ou", a.ou},
                   {"drift", a.drift},
                   {"geometry", a.geometry},
                   {"single_point", a.single_point},
                   {"tol_abs", a.tol_abs},
                   {"tol_rel", a.tol_rel},
                   {"zero_error_tol", a.zero_error_tol},
                   {"ou_min_gamma_rel", a.ou_min_gamma_rel},
                   {"drift_seeds", a.drift_seeds},
                   {"line_tol_rel", a.line_tol_rel},
                   {"cluster_tol", a.cluster_tol}};
  if (a.drift_horizon) analyses["drift_horizon"] = *a.drift_horizon;
  return {{"schema_version", c.schema_version},
          {"experiment", c.experiment},
          {"description", c.description},
          {"seed", c.seed},
          {"n_seeds", c.n_seeds},
          {"output_dir", c.output_dir},
          {"architecture",
           {{"input_dim", c.arch.input_dim},
            {"hidden_width", c.arch.hidden_width},
            {"activation", std::string(to_string(c.arch.activation))},
            {"skip", c.arch.skip_linear_and_bias}}},
          {"dataset", dataset},
          {"init",
           {{"scale", c.init.scale},
            {"shared", c.init.shared},
            {"pretrain", c.init.pretrain},
            {"pretrain_tol", c.init.pretrain_tol}}},
          {"train", train},
          {"analyses", analyses}};
}

json parse_json_text(const std::string& text, const std::string& source_name) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError({source_name + ":" + std::to_string(line) + ":" + std::to_string(col) +
                       ": malformed JSON (" + e.what() + ")"});
  }
}

void apply_override(json& j, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError({"override '" + assignment + "': expected key=value"});
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &j;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (part.empty()) throw ConfigError({"override '" + assignment + "': empty path segment"});
    if (!node->is_object()) {
      if (!node->is_null())
        throw ConfigError({"override '" + assignment + "': '" + part + "' is below a non-object"});
      *node = json::object();
    }
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

}  // namespace implreg::cli
