#include "implreg/experiment.hpp"

namespace implreg::cli {

namespace {

json arch(int d, int width, const char* act, bool skip) {
  return {{"input_dim", d}, {"hidden_width", width}, {"activation", act}, {"skip", skip}};
}

json base(const char* name, const char* description, std::uint64_t seed) {
  return {{"schema_version", kSchemaVersion},
          {"experiment", name},
          {"description", description},
          {"seed", seed},
          {"n_seeds", 1},
          {"output_dir", std::string("runs/") + name}};
}

json rademacher(double scale = 1.0) { return {{"kind", "rademacher"}, {"scale", scale}}; }

json fig1d_like(const char* name, const char* description) {
  json j = base(name, description, 1);
  j["architecture"] = arch(1, 100, "relu", true);
  j["dataset"] = {{"builtin", "fig1d"}};
  j["init"] = {{"scale", 2.0}};
  return j;
}

json single_point(const char* name, const char* act) {
  json j = base(name,
                act == std::string("tanh")
                    ? "tanh net, one datapoint: units end in the zero cluster or a +- pair"
                    : "logistic net, one datapoint: at most two unit clusters at optimal h",
                1);
  j["architecture"] = arch(3, 20, act, false);
  j["dataset"] = {{"builtin", "single_point"}};
  j["init"] = {{"scale", 0.025}};
  j["train"] = {{"eta", 1e-3},
                {"steps", 1000000},
                {"snapshot_stride", 10000},
                {"noise", rademacher()}};
  j["analyses"] = {{"single_point", true}, {"cluster_tol", 0.05}};
  return j;
}

json ou_toy(const char* name, const char* description) {
  json j = base(name, description, 3);
  j["architecture"] = arch(2, 5, "tanh", false);
  j["dataset"] = {{"builtin", "ou_toy"}, {"params", {{"input_scale", 2.0}}}};
  j["init"] = {{"scale", 1.0}, {"shared", true}, {"pretrain", true}, {"pretrain_tol", 1e-9}};
  return j;
}

json make(const std::string& name) {
  if (name == "fig1d") {
    json j = fig1d_like(
        "fig1d",
        "12 synthetic 1-d points (convex, collinear on y = x over [-0.6, 0.6], concave), "
        "width-100 relu with skip; annealed label-noise SGD until r_sum settles, then the "
        "convexity certificate against a noiseless control");
    j["train"] = {{"mode", "until_stable"},
                  {"eta", 1e-3},
                  {"snapshot_stride", 100000},
                  {"noise", rademacher()},
                  {"polish", true},
                  {"control", true}};
    j["analyses"] = {{"geometry", true}, {"line_tol_rel", 0.02}};
    return j;
  }
  if (name == "curve_length") {
    json j = fig1d_like("curve_length",
                        "loss and curve length against step for label-noise SGD on the fig1d "
                        "data, with the noiseless control length for reference");
    j["train"] = {{"eta", 1e-3},
                  {"steps", 4000000},
                  {"snapshot_stride", 20000},
                  {"noise", rademacher()},
                  {"control", true}};
    return j;
  }
  if (name == "hard_data") {
    json j = fig1d_like("hard_data",
                        "plain SGD (no label noise) on the two-copy transform of the fig1d data");
    j["dataset"] = {{"builtin", "two_copy"}, {"params", {{"base", "fig1d"}, {"delta", 0.5}}}};
    j["train"] = {{"eta", 1e-3},
                  {"steps", 2000000},
                  {"snapshot_stride", 20000},
                  {"noise", {{"kind", "none"}, {"scale", 0.0}}}};
    return j;
  }
  if (name == "tanh_sparsity_1d") {
    json j = base("tanh_sparsity_1d", "6 points in 3 clusters, 20 tanh units; counts active units",
                  0);
    j["architecture"] = arch(1, 20, "tanh", false);
    j["dataset"] = {{"builtin", "tanh_sparsity_1d"}};
    j["train"] = {{"eta", 5e-3},
                  {"steps", 2000000},
                  {"snapshot_stride", 20000},
                  {"noise", rademacher(0.5)},
                  {"polish", true}};
    j["analyses"] = {{"spectrum", true}};
    return j;
  }
  if (name == "tanh_sparsity_5d") {
    json j = base("tanh_sparsity_5d",
                  "20 Gaussian 5-d points plus 10 hard +-1 points, 20 tanh units", 0);
    j["architecture"] = arch(5, 20, "tanh", false);
    j["dataset"] = {{"builtin", "tanh_sparsity_5d"}};
    j["train"] = {{"eta", 2e-3},
                  {"steps", 1000000},
                  {"snapshot_stride", 10000},
                  {"noise", rademacher(0.5)},
                  {"polish", true}};
    j["analyses"] = {{"spectrum", true}};
    return j;
  }
  if (name == "ou_variance") {
    json j = ou_toy("ou_variance",
                    "16 runs from a pretrained zero-error tanh toy; fluctuation second moments "
                    "in the gamma eigenbasis against eta Var[e]");
    j["n_seeds"] = 16;
    j["train"] = {{"eta", 1e-3}, {"steps", 63096}, {"snapshot_stride", 10}, {"noise", rademacher()}};
    j["analyses"] = {{"spectrum", true}, {"ou", true}, {"ou_min_gamma_rel", 0.1}};
    return j;
  }
  if (name == "drift") {
    json j = ou_toy("drift",
                    "mean displacement along the zero-gamma directions of the tanh toy against "
                    "the predicted drift, 64 runs");
    j["train"] = {{"eta", 1e-3}, {"steps", 1000}, {"snapshot_stride", 100}, {"noise", rademacher()}};
    j["analyses"] = {{"spectrum", true}, {"drift", true}, {"drift_seeds", 64}};
    return j;
  }
  if (name == "single_point_logistic") return single_point("single_point_logistic", "logistic");
  if (name == "single_point_tanh") return single_point("single_point_tanh", "tanh");
  return nullptr;
}

const char* const kNames[] = {"fig1d",           "curve_length",         "hard_data",
                              "tanh_sparsity_1d", "tanh_sparsity_5d",     "ou_variance",
                              "drift",           "single_point_logistic", "single_point_tanh"};

}  // namespace

std::vector<ExperimentInfo> list_experiments() {
  std::vector<ExperimentInfo> out;
  for (const char* n : kNames) out.push_back({n, make(n)["description"].get<std::string>()});
  return out;
}

json builtin_experiment(const std::string& name) {
  json j = make(name);
  if (j.is_null()) {
    std::string known;
    for (const char* n : kNames) known += std::string(known.empty() ? "" : ", ") + n;
    throw ConfigError({"unknown experiment '" + name + "' (known: " + known + ")"});
  }
  return j;
}

}  // namespace implreg::cli
