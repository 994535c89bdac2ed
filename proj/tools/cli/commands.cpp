#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>

#include "deferkit/csv.hpp"
#include "deferkit/datasets.hpp"
#include "deferkit/error.hpp"
#include "deferkit/evaluation.hpp"
#include "deferkit/random.hpp"
#include "deferkit/training.hpp"
#include "manifest.hpp"
#include "verify.hpp"

namespace deferkit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string in_dir(const RunConfig& c, const std::string& name) {
  return (fs::path(c.text("in")) / name).string();
}

std::string out_path(const RunConfig& c, const std::string& name) {
  return (fs::path(c.text("out")) / name).string();
}

void make_out_dir(const RunConfig& c) {
  std::error_code ec;
  fs::create_directories(c.text("out"), ec);
  if (ec) throw ConfigError("out", "cannot create " + c.text("out") + ": " + ec.message());
}

void require_file(const std::string& key, const std::string& path) {
  if (!fs::is_regular_file(path)) throw ConfigError(key, "no such file " + path);
}

void write_json(const json& doc, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("out", "cannot write " + path);
  out << doc.dump(2) << '\n';
}

json training_keys(int epochs, int batch, double lr) {
  return {{"arch", "mlp"},     {"hidden", 64},       {"activation", "tanh"},
          {"epochs", epochs},  {"batch", batch},     {"lr", lr},
          {"momentum", 0.9},   {"u", 1.0},           {"val_fraction", 0.2},
          {"shuffle", true}};
}

TrainConfig train_config(const RunConfig& c) {
  TrainConfig t;
  t.epochs = c.integer("epochs");
  t.batch_size = c.integer("batch");
  t.learning_rate = c.number("lr");
  t.momentum = c.number("momentum");
  t.seed = c.seed();
  try {
    t.u = CompSumParam(c.number("u"));
  } catch (const ArgumentError& e) {
    throw ConfigError("u", e.what());
  }
  t.validation_fraction = c.number("val_fraction");
  t.shuffle = c.flag("shuffle");
  t.validate();
  return t;
}

ModelShape model_shape(const RunConfig& c) {
  ModelShape shape;
  shape.architecture = architecture_from_string(c.text("arch"));
  shape.hidden_dim = shape.architecture == Architecture::Mlp ? c.integer("hidden") : 0;
  shape.activation = activation_from_string(c.text("activation"));
  return shape;
}

void print_log(const std::string& what, const TrainingLog& log) {
  std::printf("%s: initial train %.6f val %.6f\n", what.c_str(), log.initial_train,
              log.initial_val);
  const std::size_t n = log.epochs.size();
  for (std::size_t e = 0; e < n; ++e) {
    if (n <= 10 || (e + 1) % (n / 10) == 0 || e + 1 == n) {
      const auto& r = log.epochs[e];
      std::printf("%s: epoch %d/%zu train %.6f val %.6f\n", what.c_str(), r.epoch, n,
                  r.train_surrogate, r.val_surrogate);
    }
  }
  std::printf("%s: best checkpoint from epoch %d\n", what.c_str(), log.best_epoch);
  std::fflush(stdout);
}

// Everything a training or evaluation command reads from a gen directory.
struct RunData {
  EntitySet set = EntitySet::two_stage(std::vector<double>{});
  Dataset data;
  EntityPredictions predictions{1};
  Penalty penalty = Penalty::ZeroOne;
};

RunData load_split(const RunConfig& c, const std::string& split, Manifest& manifest) {
  const auto entities = in_dir(c, "entities.json");
  const auto data_path = in_dir(c, split + ".csv");
  const auto preds_path = in_dir(c, split + "_predictions.csv");
  for (const auto& p : {entities, data_path, preds_path}) require_file("in", p);
  RunData run;
  run.set = read_entity_set_json(entities);
  const bool one_stage = run.set.regime().kind() == RegimeKind::OneStage;
  const std::string penalty = c.text("penalty");
  run.penalty = penalty.empty() ? (one_stage ? Penalty::ZeroOne : Penalty::SquaredError)
                                : penalty_from_string(penalty);
  const auto kind = output_kind_for(run.penalty);
  run.data = read_dataset_csv(data_path, kind);
  run.predictions = read_predictions_csv(preds_path, kind);
  run.predictions.validate(run.set);
  for (auto id : run.data.ids) {
    if (!run.predictions.contains(id)) {
      throw ConfigError("in", "no predictions for example " + std::to_string(id));
    }
  }
  manifest.input(entities);
  manifest.input(data_path);
  manifest.input(preds_path);
  return run;
}

DecisionRule resolve_rule(const RunConfig& c, const EntitySet& set) {
  const std::string rule = c.text("rule");
  if (!rule.empty()) return decision_rule_from_string(rule);
  return set.regime().kind() == RegimeKind::OneStage ? DecisionRule::MajorityVote
                                                     : DecisionRule::MinCost;
}

ScoreModel load_model(const RunConfig& c, const std::string& key, const std::string& fallback,
                      Manifest& manifest) {
  std::string path = c.text(key);
  if (path.empty()) path = fallback;
  require_file(key, path);
  manifest.input(path);
  return load_checkpoint(path);
}

void check_policy(const ScoreModel& policy, const RunData& run) {
  if (policy.shape().output_dim != run.set.size() ||
      policy.shape().input_dim != run.data.feature_dim) {
    throw ConfigError("policy", "checkpoint shape does not match the data");
  }
}

std::vector<int> realized_oracle_ks(const RunData& run, int k) {
  return std::vector<int>(run.data.size(), k);
}

// -realized cost per entity, so that top_k is the empirical oracle.
std::vector<double> empirical_oracle_scores(const RunData& run) {
  std::vector<double> out;
  out.reserve(run.data.size() * static_cast<std::size_t>(run.set.size()));
  for (std::size_t i = 0; i < run.data.size(); ++i) {
    const auto costs =
        cost_vector(run.set, run.predictions, run.data.ids[i], run.data.targets[i], run.penalty);
    for (double c : costs) out.push_back(-c);
  }
  return out;
}

std::vector<int> adaptive_ks(const ScoreModel& cardinality, const Dataset& data) {
  std::vector<int> ks(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) ks[i] = adaptive_k(cardinality.forward(data.x(i)));
  return ks;
}

CardinalityLossConfig cardinality_config(const RunConfig& c, const EntitySet& set, double lambda) {
  CardinalityLossConfig card;
  card.metric = resolve_rule(c, set);
  card.lambda = lambda;
  card.xi = budget_transform_from_string(c.text("xi"));
  card.validate();
  return card;
}

}  // namespace

json gen_defaults() {
  return {{"seed", 0},
          {"out", "run"},
          {"synthetic", true},
          {"tabular", ""},
          {"task", "classification"},
          {"classes", 10},
          {"dim", 10},
          {"n", 20000},
          {"separation", 3.0},
          {"noise", 0.5},
          {"experts", 6},
          {"p", 0.94},
          {"fees", json::array()},
          {"alpha", 1.0},
          {"test_fraction", 0.2},
          {"target", "target"},
          {"features", json::array()},
          {"subset_fraction", 0.3},
          {"hidden", 16},
          {"epochs", 30},
          {"batch", 64},
          {"lr", 0.01},
          {"base_fee", 0.0}};
}

json train_policy_defaults() {
  json d = {{"seed", 0}, {"in", "run"}, {"out", "run"}, {"penalty", ""}};
  d.update(training_keys(50, 256, 0.002));
  return d;
}

json train_cardinality_defaults() {
  json d = {{"seed", 0},       {"in", "run"}, {"out", "run"},    {"penalty", ""},
            {"policy", ""},    {"lambda", 1.0}, {"xi", "identity"}, {"rule", ""}};
  d.update(training_keys(50, 256, 0.002));
  return d;
}

json eval_defaults() {
  return {{"seed", 0},         {"in", "run"},      {"out", "run"},  {"penalty", ""},
          {"policy", ""},      {"cardinality", ""}, {"k", 1},        {"rule", ""},
          {"split", "test"},   {"mode", "policy"}, {"report", "report.json"}};
}

json sweep_defaults() {
  json d = {{"seed", 0},        {"in", "run"},       {"out", "run"},   {"penalty", ""},
            {"policy", ""},     {"rule", ""},        {"split", "test"}, {"xi", "identity"},
            {"lambdas", json::array()}};
  d.update(training_keys(50, 256, 0.002));
  return d;
}

int run_gen(const RunConfig& c) {
  make_out_dir(c);
  Manifest manifest(c);
  const auto seed = c.seed();
  const double p = c.number("p");
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("p", "must lie in [0, 1]");
  const double test_fraction = c.number("test_fraction");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test_fraction", "must lie in (0, 1)");
  }
  const std::string tabular = c.text("tabular");
  const std::string task = c.text("task");
  if (task != "classification" && task != "regression") {
    throw ConfigError("task", "expected classification or regression");
  }

  Dataset train;
  Dataset test;
  std::vector<std::string> written;
  const auto save = [&](const std::string& name) {
    written.push_back(out_path(c, name));
    return written.back();
  };

  const auto regression_pool = [&](const Dataset& tr, const Dataset& te) {
    RegressionPoolSpec spec;
    spec.n_experts = c.integer("experts");
    spec.subset_fraction = c.number("subset_fraction");
    spec.hidden_dim = c.integer("hidden");
    spec.fees = c.numbers("fees");
    spec.base_fee = c.number("base_fee");
    spec.alpha = c.number("alpha");
    spec.train.epochs = c.integer("epochs");
    spec.train.batch_size = c.integer("batch");
    spec.train.learning_rate = c.number("lr");
    spec.train.seed = derive_seed(seed, 6);
    std::printf("gen: fitting base predictor and %d experts\n", spec.n_experts);
    std::fflush(stdout);
    return build_regression_pool(tr, te, spec);
  };

  if (!tabular.empty()) {
    require_file("tabular", tabular);
    manifest.input(tabular);
    TabularSchema schema;
    schema.feature_columns = c.texts("features");
    schema.target_column = c.text("target");
    schema.train_fraction = 1.0 - test_fraction;
    schema.seed = derive_seed(seed, 5);
    auto loaded = load_tabular(tabular, schema);
    for (const auto& w : loaded.warnings) std::printf("gen: warning: %s\n", w.c_str());
    train = std::move(loaded.train);
    test = std::move(loaded.test);
    const auto pool = regression_pool(train, test);
    write_entity_set_json(pool.set, save("entities.json"));
    write_predictions_csv(pool.train_predictions, save("train_predictions.csv"));
    write_predictions_csv(pool.test_predictions, save("test_predictions.csv"));
  } else {
    SyntheticSpec spec;
    spec.task = task == "regression" ? SyntheticTask::Regression : SyntheticTask::Classification;
    spec.n_classes = c.integer("classes");
    spec.feature_dim = c.integer("dim");
    spec.n_examples = c.integer("n");
    spec.separation = c.number("separation");
    spec.noise = c.number("noise");
    spec.seed = seed;
    const auto data = generate_synthetic(spec);
    const auto n_train = static_cast<std::size_t>(
        std::floor((1.0 - test_fraction) * static_cast<double>(data.size())));
    if (n_train == 0 || n_train == data.size()) {
      throw ConfigError("test_fraction", "leaves an empty split");
    }
    std::vector<std::size_t> head(n_train);
    std::vector<std::size_t> tail(data.size() - n_train);
    std::iota(head.begin(), head.end(), 0);
    std::iota(tail.begin(), tail.end(), n_train);
    train = data.subset(head);
    test = data.subset(tail);
    if (spec.task == SyntheticTask::Classification) {
      ExpertPoolSpec pool_spec;
      pool_spec.n_experts = c.integer("experts");
      pool_spec.p = p;
      pool_spec.fees = c.numbers("fees");
      pool_spec.alpha = c.number("alpha");
      pool_spec.seed = derive_seed(seed, 6);
      const auto pool = generate_experts(data, spec.n_classes, pool_spec);
      EntityPredictions train_preds(pool.set.size());
      EntityPredictions test_preds(pool.set.size());
      for (auto id : train.ids) {
        const auto r = pool.predictions.row(id);
        train_preds.add(id, {r.begin(), r.end()});
      }
      for (auto id : test.ids) {
        const auto r = pool.predictions.row(id);
        test_preds.add(id, {r.begin(), r.end()});
      }
      write_entity_set_json(pool.set, save("entities.json"));
      write_predictions_csv(train_preds, save("train_predictions.csv"));
      write_predictions_csv(test_preds, save("test_predictions.csv"));
    } else {
      const auto pool = regression_pool(train, test);
      write_entity_set_json(pool.set, save("entities.json"));
      write_predictions_csv(pool.train_predictions, save("train_predictions.csv"));
      write_predictions_csv(pool.test_predictions, save("test_predictions.csv"));
    }
    write_conditionals_json(train, save("train_conditionals.json"));
    write_conditionals_json(test, save("test_conditionals.json"));
  }
  write_dataset_csv(train, save("train.csv"));
  write_dataset_csv(test, save("test.csv"));
  for (const auto& p : written) manifest.artifact(p);
  std::printf("gen: %zu train / %zu test examples -> %s\n", train.size(), test.size(),
              manifest.write(c.text("out")).c_str());
  return 0;
}

int run_train_policy(const RunConfig& c) {
  Manifest manifest(c);
  const auto run = load_split(c, "train", manifest);
  const auto config = train_config(c);
  make_out_dir(c);
  std::printf("train-policy: %zu examples, |A| = %d\n", run.data.size(), run.set.size());
  const auto result =
      train_policy(run.data, run.set, run.predictions, run.penalty, model_shape(c), config);
  print_log("train-policy", result.log);
  save_checkpoint(result.model, out_path(c, "policy.json"));
  result.log.write_csv(out_path(c, "policy_log.csv"));
  result.log.write_loss_curve(out_path(c, "policy_loss_curve.csv"));
  for (const char* name : {"policy.json", "policy_log.csv", "policy_loss_curve.csv"}) {
    manifest.artifact(out_path(c, name));
  }
  std::printf("train-policy: wrote %s\n", manifest.write(c.text("out")).c_str());
  return 0;
}

int run_train_cardinality(const RunConfig& c) {
  Manifest manifest(c);
  const auto run = load_split(c, "train", manifest);
  const auto policy = load_model(c, "policy", in_dir(c, "policy.json"), manifest);
  check_policy(policy, run);
  const auto card = cardinality_config(c, run.set, c.number("lambda"));
  const auto config = train_config(c);
  make_out_dir(c);
  const auto result = train_cardinality(run.data, policy, run.set, run.predictions, card,
                                        model_shape(c), config);
  print_log("train-cardinality", result.log);
  std::printf("train-cardinality: %zu of %zu examples had tied candidate losses (uniform weights)\n",
              result.log.degenerate_examples, run.data.size());
  save_checkpoint(result.model, out_path(c, "cardinality.json"));
  result.log.write_csv(out_path(c, "cardinality_log.csv"));
  result.log.write_loss_curve(out_path(c, "cardinality_loss_curve.csv"));
  for (const char* name : {"cardinality.json", "cardinality_log.csv", "cardinality_loss_curve.csv"}) {
    manifest.artifact(out_path(c, name));
  }
  std::printf("train-cardinality: wrote %s\n", manifest.write(c.text("out")).c_str());
  return 0;
}

int run_eval(const RunConfig& c) {
  Manifest manifest(c);
  const auto run = load_split(c, c.text("split"), manifest);
  const auto rule = resolve_rule(c, run.set);
  const std::string mode = c.text("mode");
  const int k = c.integer("k");
  if (k < 1 || k > run.set.size()) {
    throw ConfigError("k", "must lie in 1.." + std::to_string(run.set.size()));
  }
  MetricsReport report;
  if (mode == "empirical-oracle") {
    const auto scores = empirical_oracle_scores(run);
    report = evaluate_selections(run.data, run.set, run.predictions, scores,
                                 realized_oracle_ks(run, k), rule);
    report.k_mode = "empirical-oracle";
  } else if (mode == "policy") {
    const auto policy = load_model(c, "policy", in_dir(c, "policy.json"), manifest);
    check_policy(policy, run);
    std::optional<ScoreModel> cardinality;
    if (!c.text("cardinality").empty()) {
      cardinality = load_model(c, "cardinality", "", manifest);
    }
    report = evaluate(run.data, run.set, run.predictions, policy,
                      cardinality ? &*cardinality : nullptr, k, rule);
  } else {
    throw ConfigError("mode", "expected policy or empirical-oracle");
  }
  report.seed = c.seed();
  make_out_dir(c);
  const auto path = out_path(c, c.text("report"));
  write_json(to_json(report), path);
  manifest.artifact(path);
  std::printf("eval: %s = %.6f, k_bar = %.4f, budget_bar = %.6f\n", report.metric_name.c_str(),
              report.value, report.k_bar, report.budget_bar);
  std::printf("eval: wrote %s\n", manifest.write(c.text("out")).c_str());
  return 0;
}

int run_sweep(const RunConfig& c) {
  Manifest manifest(c);
  const auto train = load_split(c, "train", manifest);
  const auto test = load_split(c, c.text("split"), manifest);
  const auto policy = load_model(c, "policy", in_dir(c, "policy.json"), manifest);
  check_policy(policy, test);
  const auto rule = resolve_rule(c, test.set);
  auto lambdas = c.numbers("lambdas");
  if (lambdas.empty()) lambdas = default_lambda_grid();
  const auto config = train_config(c);
  make_out_dir(c);

  const auto scores = policy_scores(policy, test.data);
  std::vector<FrontierRow> fixed;
  for (int k = 1; k <= test.set.size(); ++k) {
    const std::vector<int> ks(test.data.size(), k);
    const auto r = evaluate_selections(test.data, test.set, test.predictions, scores, ks, rule);
    fixed.push_back({static_cast<double>(k), r.budget_bar, r.k_bar, r.value});
    std::printf("sweep: k = %d budget %.6f %s %.6f\n", k, r.budget_bar, r.metric_name.c_str(),
                r.value);
  }
  std::vector<FrontierRow> adaptive;
  for (double lambda : lambdas) {
    const auto card = cardinality_config(c, test.set, lambda);
    const auto model = train_cardinality(train.data, policy, train.set, train.predictions, card,
                                         model_shape(c), config)
                           .model;
    const auto ks = adaptive_ks(model, test.data);
    const auto r = evaluate_selections(test.data, test.set, test.predictions, scores, ks, rule);
    adaptive.push_back({lambda, r.budget_bar, r.k_bar, r.value});
    std::printf("sweep: lambda = %g k_bar %.4f budget %.6f %s %.6f\n", lambda, r.k_bar,
                r.budget_bar, r.metric_name.c_str(), r.value);
    std::fflush(stdout);
  }
  write_frontier_csv(fixed, out_path(c, "frontier_fixed.csv"));
  write_frontier_csv(adaptive, out_path(c, "frontier_adaptive.csv"));
  manifest.artifact(out_path(c, "frontier_fixed.csv"));
  manifest.artifact(out_path(c, "frontier_adaptive.csv"));
  std::printf("sweep: wrote %s\n", manifest.write(c.text("out")).c_str());
  return 0;
}

json verify_defaults() {
  return {{"seed", 0},          {"out", "verify"}, {"checks", "losses,bayes,cascade"},
          {"inject_fault", false}, {"u", 1.0},      {"trials", 10000}};
}

int run_verify(const RunConfig& c) {
  VerifyOptions options;
  options.seed = c.seed();
  options.u = c.number("u");
  options.trials = c.integer("trials");
  options.inject_fault = c.flag("inject_fault");
  if (options.trials < 1) throw ConfigError("trials", "must be positive");
  try {
    (void)CompSumParam(options.u);
  } catch (const ArgumentError& e) {
    throw ConfigError("u", e.what());
  }
  std::vector<std::string> suites;
  std::stringstream list(c.text("checks"));
  for (std::string name; std::getline(list, name, ',');) {
    if (!name.empty()) suites.push_back(name);
  }
  if (suites.empty()) throw ConfigError("checks", "no suites selected");
  for (const auto& s : suites) {
    const auto& known = suite_names();
    if (std::find(known.begin(), known.end(), s) == known.end()) {
      throw ConfigError("checks", "unknown suite " + s + " (losses, bayes, cascade)");
    }
  }
  make_out_dir(c);
  Manifest manifest(c);
  json checks = json::array();
  std::size_t failed = 0;
  for (const auto& suite : suites) {
    for (const auto& result : run_suite(suite, options)) {
      std::printf("verify: %-8s %-24s %s (%zu/%zu failed, %.2fs)\n", result.suite.c_str(),
                  result.name.c_str(), result.passed() ? "pass" : "FAIL", result.failures,
                  result.trials, result.seconds);
      std::fflush(stdout);
      if (!result.passed()) ++failed;
      auto entry = to_json(result);
      entry.erase("seconds");
      checks.push_back(std::move(entry));
    }
  }
  const json report = {{"seed", options.seed},       {"u", options.u},
                       {"inject_fault", options.inject_fault},
                       {"passed", failed == 0},      {"checks", checks}};
  const auto path = out_path(c, "verify_report.json");
  write_json(report, path);
  manifest.artifact(path);
  std::printf("verify: %zu failing check(s); wrote %s\n", failed,
              manifest.write(c.text("out")).c_str());
  return failed == 0 ? 0 : 4;
}

}  // namespace deferkit::cli
