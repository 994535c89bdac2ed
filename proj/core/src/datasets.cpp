#include "deferkit/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "deferkit/csv.hpp"
#include "deferkit/error.hpp"
#include "deferkit/random.hpp"

namespace deferkit {

Dataset Dataset::subset(std::span<const std::size_t> positions) const {
  Dataset out;
  out.feature_dim = feature_dim;
  out.ids.reserve(positions.size());
  out.features.reserve(positions.size() * static_cast<std::size_t>(feature_dim));
  out.targets.reserve(positions.size());
  for (std::size_t p : positions) {
    if (p >= size()) throw LookupError("dataset row out of range");
    out.ids.push_back(ids[p]);
    const auto row = x(p);
    out.features.insert(out.features.end(), row.begin(), row.end());
    out.targets.push_back(targets[p]);
    if (has_conditionals()) out.conditionals.push_back(conditionals[p]);
  }
  return out;
}

void Dataset::validate() const {
  if (feature_dim < 1) throw ArgumentError("dataset feature_dim must be >= 1");
  if (features.size() != ids.size() * static_cast<std::size_t>(feature_dim) ||
      targets.size() != ids.size()) {
    throw ArgumentError("dataset columns have inconsistent lengths");
  }
  if (has_conditionals() && conditionals.size() != ids.size()) {
    throw ArgumentError("dataset needs one conditional per example");
  }
  for (double f : features) {
    if (!std::isfinite(f)) throw ArgumentError("dataset features must be finite");
  }
}

void SyntheticSpec::validate() const {
  if (n_examples < 1) throw ConfigError("n_examples", "must be >= 1");
  if (feature_dim < 1) throw ConfigError("feature_dim", "must be >= 1");
  if (!std::isfinite(separation) || separation < 0.0) {
    throw ConfigError("separation", "must be finite and >= 0");
  }
  if (task == SyntheticTask::Regression) {
    if (!std::isfinite(noise) || noise < 0.0) throw ConfigError("noise", "must be >= 0");
    return;
  }
  if (n_classes < 1) throw ConfigError("classes", "must be >= 1");
  if (n_classes > 2 * feature_dim) {
    throw ConfigError("classes", "at most 2 * feature_dim classes are supported");
  }
  if (!priors.empty()) {
    if (static_cast<int>(priors.size()) != n_classes) {
      throw ConfigError("priors", "need one prior per class");
    }
    double total = 0.0;
    for (double p : priors) {
      if (!std::isfinite(p) || p < 0.0) throw ConfigError("priors", "must be >= 0");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("priors", "must sum to 1");
  }
}

std::vector<std::vector<double>> mixture_means(const SyntheticSpec& spec) {
  std::vector<std::vector<double>> means(static_cast<std::size_t>(spec.n_classes),
                                         std::vector<double>(spec.feature_dim, 0.0));
  for (int c = 0; c < spec.n_classes; ++c) {
    const int axis = c % spec.feature_dim;
    const double sign = c < spec.feature_dim ? 1.0 : -1.0;
    means[static_cast<std::size_t>(c)][static_cast<std::size_t>(axis)] = sign * spec.separation;
  }
  return means;
}

namespace {

std::size_t draw_index(Rng& rng, std::span<const double> probs) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  // Rounding left u above the total: take the last positive entry.
  for (std::size_t i = probs.size(); i-- > 0;) {
    if (probs[i] > 0.0) return i;
  }
  return 0;
}

}  // namespace

Dataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  Dataset data;
  data.feature_dim = spec.feature_dim;
  const auto n = static_cast<std::size_t>(spec.n_examples);
  const auto d = static_cast<std::size_t>(spec.feature_dim);
  data.ids.resize(n);
  std::iota(data.ids.begin(), data.ids.end(), std::int64_t{0});
  data.features.resize(n * d);

  if (spec.task == SyntheticTask::Regression) {
    const double w = 1.0 / std::sqrt(static_cast<double>(d));
    for (std::size_t i = 0; i < n; ++i) {
      double mean = 0.0;
      for (std::size_t f = 0; f < d; ++f) {
        const double v = rng.normal();
        data.features[i * d + f] = v;
        mean += w * v;
      }
      const double z = rng.bernoulli(0.5) ? mean + spec.noise : mean - spec.noise;
      data.targets.emplace_back(z);
      if (spec.noise == 0.0) {
        data.conditionals.emplace_back(std::vector<Output>{mean}, std::vector<double>{1.0});
      } else {
        data.conditionals.emplace_back(
            std::vector<Output>{mean - spec.noise, mean + spec.noise},
            std::vector<double>{0.5, 0.5});
      }
    }
    return data;
  }

  const auto classes = static_cast<std::size_t>(spec.n_classes);
  std::vector<double> priors = spec.priors;
  if (priors.empty()) priors.assign(classes, 1.0 / static_cast<double>(classes));
  const auto means = mixture_means(spec);
  std::vector<Output> support;
  for (int c = 1; c <= spec.n_classes; ++c) support.emplace_back(ClassId{c});

  std::vector<double> log_post(classes);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t y = draw_index(rng, priors);
    for (std::size_t f = 0; f < d; ++f) data.features[i * d + f] = means[y][f] + rng.normal();
    data.targets.emplace_back(ClassId{static_cast<int>(y) + 1});

    double best = -INFINITY;
    for (std::size_t c = 0; c < classes; ++c) {
      if (priors[c] == 0.0) {
        log_post[c] = -INFINITY;
        continue;
      }
      double sq = 0.0;
      for (std::size_t f = 0; f < d; ++f) {
        const double diff = data.features[i * d + f] - means[c][f];
        sq += diff * diff;
      }
      log_post[c] = std::log(priors[c]) - 0.5 * sq;
      best = std::max(best, log_post[c]);
    }
    std::vector<double> probs(classes);
    double total = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      probs[c] = std::exp(log_post[c] - best);
      total += probs[c];
    }
    for (double& p : probs) p /= total;
    data.conditionals.emplace_back(support, std::move(probs));
  }
  return data;
}

std::vector<double> default_fees(int n_experts) {
  std::vector<double> fees;
  for (int e = 0; e < n_experts; ++e) {
    // Exact decimal steps: (50 - 5e) thousandths.
    fees.push_back(std::max(5, 50 - 5 * e) / 1000.0);
  }
  return fees;
}

std::vector<std::vector<int>> default_specialties(int n_classes, int n_experts, int size) {
  size = std::min(size, n_classes);
  const int blocks = (n_classes + size - 1) / size;
  std::vector<std::vector<int>> out;
  for (int e = 0; e < n_experts; ++e) {
    const int b = e % blocks;
    std::vector<int> classes;
    for (int c = b * size; c < std::min(n_classes, (b + 1) * size); ++c) classes.push_back(c + 1);
    out.push_back(std::move(classes));
  }
  return out;
}

void ExpertPoolSpec::validate(int n_classes) const {
  if (n_experts < 0) throw ConfigError("experts", "must be >= 0");
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("p", "must lie in [0, 1]");
  if (!std::isfinite(alpha) || alpha < 0.0) throw ConfigError("alpha", "must be >= 0");
  if (!specialties.empty() && static_cast<int>(specialties.size()) != n_experts) {
    throw ConfigError("specialties", "need one specialty set per expert");
  }
  for (const auto& set : specialties) {
    for (int c : set) {
      if (c < 1 || c > n_classes) {
        throw ConfigError("specialties", "class " + std::to_string(c) + " outside 1.." +
                                             std::to_string(n_classes));
      }
    }
  }
  if (!fees.empty() && static_cast<int>(fees.size()) != n_experts) {
    throw ConfigError("fees", "need one fee per expert");
  }
  for (double f : fees) {
    if (!std::isfinite(f) || f < 0.0) throw ConfigError("fees", "must be >= 0");
  }
}

ExpertPool generate_experts(const Dataset& data, int n_classes, const ExpertPoolSpec& spec) {
  spec.validate(n_classes);
  const auto specialties = spec.specialties.empty()
                               ? default_specialties(n_classes, spec.n_experts)
                               : spec.specialties;
  const auto fees = spec.fees.empty() ? default_fees(spec.n_experts) : spec.fees;
  EntitySet set = EntitySet::one_stage(n_classes, fees, 1.0, spec.alpha);

  std::vector<std::vector<double>> accuracy;
  std::vector<std::vector<char>> is_special;
  for (int e = 0; e < spec.n_experts; ++e) {
    std::vector<char> mask(static_cast<std::size_t>(n_classes), 0);
    for (int c : specialties[static_cast<std::size_t>(e)]) mask[static_cast<std::size_t>(c - 1)] = 1;
    std::vector<double> acc(static_cast<std::size_t>(n_classes));
    for (int c = 0; c < n_classes; ++c) {
      acc[static_cast<std::size_t>(c)] =
          mask[static_cast<std::size_t>(c)] ? spec.p : 1.0 / static_cast<double>(n_classes);
    }
    accuracy.push_back(std::move(acc));
    is_special.push_back(std::move(mask));
  }

  Rng rng(spec.seed);
  EntityPredictions preds(set.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto* target = std::get_if<ClassId>(&data.targets[i]);
    if (target == nullptr) throw OutputKindError("generate_experts needs a classification dataset");
    const int y = target->value;
    if (y < 1 || y > n_classes) throw ArgumentError("target class outside 1..n");
    std::vector<Output> row;
    row.reserve(static_cast<std::size_t>(set.size()));
    for (int c = 1; c <= n_classes; ++c) row.emplace_back(ClassId{c});
    for (int e = 0; e < spec.n_experts; ++e) {
      int predicted = 0;
      if (is_special[static_cast<std::size_t>(e)][static_cast<std::size_t>(y - 1)]) {
        if (rng.bernoulli(spec.p) || n_classes == 1) {
          predicted = y;
        } else {
          // Uniform over the n - 1 wrong classes.
          predicted = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n_classes - 1)));
          if (predicted >= y) ++predicted;
        }
      } else {
        predicted = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n_classes)));
      }
      row.emplace_back(ClassId{predicted});
    }
    preds.add(data.ids[i], std::move(row));
  }
  return ExpertPool{std::move(set), std::move(preds), std::move(accuracy)};
}

std::vector<double> model_expected_costs(const ExpertPool& pool, const DiscreteConditional& cond) {
  const int n = pool.set.regime().n_labels();
  std::vector<double> class_prob(static_cast<std::size_t>(n), 0.0);
  const auto support = cond.support();
  const auto probs = cond.probs();
  for (std::size_t s = 0; s < support.size(); ++s) {
    const auto* c = std::get_if<ClassId>(&support[s]);
    if (c == nullptr || c->value < 1 || c->value > n) {
      throw ArgumentError("conditional support must be classes 1..n");
    }
    class_prob[static_cast<std::size_t>(c->value - 1)] += probs[s];
  }
  std::vector<double> mu;
  mu.reserve(static_cast<std::size_t>(pool.set.size()));
  for (int j = 1; j <= pool.set.size(); ++j) {
    const Entity& e = pool.set.at(j);
    if (j <= n) {
      mu.push_back(e.alpha * (1.0 - class_prob[static_cast<std::size_t>(j - 1)]) + e.beta);
      continue;
    }
    const auto& acc = pool.accuracy[static_cast<std::size_t>(j - n - 1)];
    double correct = 0.0;
    for (int c = 0; c < n; ++c) {
      correct += class_prob[static_cast<std::size_t>(c)] * acc[static_cast<std::size_t>(c)];
    }
    mu.push_back(e.alpha * (1.0 - correct) + e.beta);
  }
  return mu;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_positions(
    std::size_t n, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ConfigError("train_fraction", "must lie in (0, 1)");
  }
  Rng rng(seed);
  auto perm = rng.permutation(n);
  const auto cut = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
  std::vector<std::size_t> first(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(cut));
  std::vector<std::size_t> second(perm.begin() + static_cast<std::ptrdiff_t>(cut), perm.end());
  return {std::move(first), std::move(second)};
}

TabularData load_tabular(const std::string& path, const TabularSchema& schema) {
  const auto table = csv::read(path);
  const auto target_col = table.column(schema.target_column);
  if (!target_col) throw MissingColumnError(schema.target_column);
  const auto id_col = table.column(schema.id_column);

  std::vector<std::string> names = schema.feature_columns;
  if (names.empty()) {
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      if (c != *target_col && (!id_col || c != *id_col)) names.push_back(table.header[c]);
    }
  }
  if (names.empty()) throw ConfigError("columns", path + " has no feature columns");
  std::vector<std::size_t> feature_cols;
  for (const auto& name : names) {
    const auto col = table.column(name);
    if (!col) throw MissingColumnError(name);
    feature_cols.push_back(*col);
  }

  Dataset all;
  all.feature_dim = static_cast<int>(feature_cols.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    auto number = [&](std::size_t col) {
      const auto v = csv::parse_double(row[col]);
      if (!v || !std::isfinite(*v)) {
        throw NonNumericCellError(table.line_numbers[r], table.header[col], row[col]);
      }
      return *v;
    };
    if (id_col) {
      const auto id = csv::parse_int(row[*id_col]);
      if (!id) throw NonNumericCellError(table.line_numbers[r], schema.id_column, row[*id_col]);
      all.ids.push_back(*id);
    } else {
      all.ids.push_back(static_cast<std::int64_t>(r));
    }
    for (std::size_t col : feature_cols) all.features.push_back(number(col));
    all.targets.emplace_back(number(*target_col));
  }

  auto [train_pos, test_pos] = split_positions(all.size(), schema.train_fraction, schema.seed);
  TabularData out;
  out.train = all.subset(train_pos);
  out.test = all.subset(test_pos);
  out.feature_names = names;

  const auto d = static_cast<std::size_t>(all.feature_dim);
  const auto n_train = out.train.size();
  out.means.assign(d, 0.0);
  out.variances.assign(d, 0.0);
  if (n_train == 0) throw ConfigError("train_fraction", "training split is empty");
  for (std::size_t i = 0; i < n_train; ++i) {
    for (std::size_t f = 0; f < d; ++f) out.means[f] += out.train.features[i * d + f];
  }
  for (double& m : out.means) m /= static_cast<double>(n_train);
  for (std::size_t i = 0; i < n_train; ++i) {
    for (std::size_t f = 0; f < d; ++f) {
      const double diff = out.train.features[i * d + f] - out.means[f];
      out.variances[f] += diff * diff;
    }
  }
  for (double& v : out.variances) v /= static_cast<double>(n_train);

  std::vector<double> scale(d);
  for (std::size_t f = 0; f < d; ++f) {
    double var = out.variances[f];
    if (var < 1e-12) {
      out.warnings.push_back("column '" + names[f] + "' has variance below 1e-12");
      var = 1e-12;
    }
    scale[f] = 1.0 / std::sqrt(var);
  }
  for (Dataset* part : {&out.train, &out.test}) {
    for (std::size_t i = 0; i < part->size(); ++i) {
      for (std::size_t f = 0; f < d; ++f) {
        double& v = part->features[i * d + f];
        v = (v - out.means[f]) * scale[f];
      }
    }
  }
  return out;
}

namespace {

std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("path", "cannot write " + path);
  return out;
}

Output parse_output(const std::string& cell, OutputKind kind, std::size_t line,
                    const std::string& column) {
  if (kind == OutputKind::Class) {
    const auto v = csv::parse_int(cell);
    if (!v) throw NonNumericCellError(line, column, cell);
    return ClassId{static_cast<int>(*v)};
  }
  const auto v = csv::parse_double(cell);
  if (!v) throw NonNumericCellError(line, column, cell);
  return *v;
}

nlohmann::json output_to_json(const Output& o) {
  if (const auto* c = std::get_if<ClassId>(&o)) return c->value;
  return std::get<double>(o);
}

}  // namespace

void write_dataset_csv(const Dataset& data, const std::string& path) {
  auto out = open_for_write(path);
  out << "example_id";
  for (int f = 1; f <= data.feature_dim; ++f) out << ",f_" << f;
  out << ",target\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.ids[i];
    for (double v : data.x(i)) out << ',' << csv::format(v);
    out << ',' << (kind_of(data.targets[i]) == OutputKind::Class
                       ? std::to_string(std::get<ClassId>(data.targets[i]).value)
                       : csv::format(std::get<double>(data.targets[i])))
        << '\n';
  }
}

Dataset read_dataset_csv(const std::string& path, OutputKind kind) {
  const auto table = csv::read(path);
  const auto id_col = table.column("example_id");
  if (!id_col) throw MissingColumnError("example_id");
  const auto target_col = table.column("target");
  if (!target_col) throw MissingColumnError("target");
  std::vector<std::size_t> feature_cols;
  for (int f = 1;; ++f) {
    const auto col = table.column("f_" + std::to_string(f));
    if (!col) break;
    feature_cols.push_back(*col);
  }
  if (feature_cols.empty()) throw MissingColumnError("f_1");
  Dataset data;
  data.feature_dim = static_cast<int>(feature_cols.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto id = csv::parse_int(row[*id_col]);
    if (!id) throw NonNumericCellError(table.line_numbers[r], "example_id", row[*id_col]);
    data.ids.push_back(*id);
    for (std::size_t col : feature_cols) {
      const auto v = csv::parse_double(row[col]);
      if (!v) throw NonNumericCellError(table.line_numbers[r], table.header[col], row[col]);
      data.features.push_back(*v);
    }
    data.targets.push_back(parse_output(row[*target_col], kind, table.line_numbers[r], "target"));
  }
  data.validate();
  return data;
}

void write_conditionals_json(const Dataset& data, const std::string& path) {
  nlohmann::json doc = nlohmann::json::array();
  for (std::size_t i = 0; i < data.conditionals.size(); ++i) {
    nlohmann::json support = nlohmann::json::array();
    for (const auto& o : data.conditionals[i].support()) support.push_back(output_to_json(o));
    const auto probs = data.conditionals[i].probs();
    doc.push_back({{"example_id", data.ids[i]},
                   {"support", support},
                   {"probs", std::vector<double>(probs.begin(), probs.end())}});
  }
  auto out = open_for_write(path);
  out << doc.dump() << '\n';
}

void read_conditionals_json(Dataset& data, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("path", "cannot open " + path);
  nlohmann::json doc;
  try {
    in >> doc;
    std::unordered_map<std::int64_t, DiscreteConditional> by_id;
    for (const auto& item : doc) {
      std::vector<Output> support;
      for (const auto& s : item.at("support")) {
        if (s.is_number_integer()) {
          support.emplace_back(ClassId{s.get<int>()});
        } else {
          support.emplace_back(s.get<double>());
        }
      }
      by_id.emplace(item.at("example_id").get<std::int64_t>(),
                    DiscreteConditional(std::move(support),
                                        item.at("probs").get<std::vector<double>>()));
    }
    data.conditionals.clear();
    for (auto id : data.ids) {
      const auto it = by_id.find(id);
      if (it == by_id.end()) {
        throw LookupError("no conditional for example id " + std::to_string(id));
      }
      data.conditionals.push_back(it->second);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("conditionals", path + ": " + e.what());
  }
}

void write_predictions_csv(const EntityPredictions& preds, const std::string& path) {
  auto out = open_for_write(path);
  out << "example_id";
  for (int j = 1; j <= preds.n_entities(); ++j) out << ",entity_" << j;
  out << '\n';
  for (std::size_t pos = 0; pos < preds.size(); ++pos) {
    out << preds.id_at(pos);
    for (const auto& o : preds.row_at(pos)) {
      out << ',';
      if (const auto* c = std::get_if<ClassId>(&o)) {
        out << c->value;
      } else {
        out << csv::format(std::get<double>(o));
      }
    }
    out << '\n';
  }
}

EntityPredictions read_predictions_csv(const std::string& path, OutputKind kind) {
  const auto table = csv::read(path);
  const auto id_col = table.column("example_id");
  if (!id_col) throw MissingColumnError("example_id");
  std::vector<std::size_t> cols;
  for (int j = 1;; ++j) {
    const auto col = table.column("entity_" + std::to_string(j));
    if (!col) break;
    cols.push_back(*col);
  }
  if (cols.empty()) throw MissingColumnError("entity_1");
  EntityPredictions preds(static_cast<int>(cols.size()));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto id = csv::parse_int(row[*id_col]);
    if (!id) throw NonNumericCellError(table.line_numbers[r], "example_id", row[*id_col]);
    std::vector<Output> values;
    for (std::size_t col : cols) {
      values.push_back(parse_output(row[col], kind, table.line_numbers[r], table.header[col]));
    }
    preds.add(*id, std::move(values));
  }
  return preds;
}

void write_entity_set_json(const EntitySet& set, const std::string& path) {
  nlohmann::json entities = nlohmann::json::array();
  for (const auto& e : set.entities()) {
    entities.push_back(
        {{"index", e.index}, {"kind", to_string(e.kind)}, {"alpha", e.alpha}, {"beta", e.beta}});
  }
  const nlohmann::json doc = {{"regime", to_string(set.regime().kind())},
                              {"n", set.regime().n_labels()},
                              {"J", set.n_experts()},
                              {"entities", entities}};
  auto out = open_for_write(path);
  out << doc.dump(1) << '\n';
}

EntitySet read_entity_set_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("path", "cannot open " + path);
  try {
    nlohmann::json doc;
    in >> doc;
    const auto kind = regime_kind_from_string(doc.at("regime").get<std::string>());
    const int n = doc.value("n", 0);
    const Regime regime = kind == RegimeKind::OneStage ? Regime::one_stage(n) : Regime::two_stage();
    std::vector<Entity> entities;
    for (const auto& item : doc.at("entities")) {
      Entity e;
      e.index = item.at("index").get<int>();
      e.kind = entity_kind_from_string(item.at("kind").get<std::string>());
      e.alpha = item.value("alpha", 1.0);
      e.beta = item.value("beta", 0.0);
      if (e.kind == EntityKind::Label) {
        e.ref = e.index;
      } else if (e.kind == EntityKind::Expert) {
        e.ref = kind == RegimeKind::OneStage ? e.index - n : e.index - 1;
      }
      entities.push_back(e);
    }
    EntitySet set(regime, std::move(entities));
    if (doc.contains("J") && doc.at("J").get<int>() != set.n_experts()) {
      throw ConfigError("J", "declared expert count does not match the entity list");
    }
    return set;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("entity_set", path + ": " + e.what());
  }
}

}  // namespace deferkit
