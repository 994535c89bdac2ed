#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "deferkit/csv.hpp"
#include "deferkit/datasets.hpp"
#include "deferkit/error.hpp"
#include "deferkit/random.hpp"

using namespace deferkit;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("deferkit_ds_" + std::to_string(counter_++))) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

int class_of(const Output& o) { return std::get<ClassId>(o).value; }

}  // namespace

TEST(Synthetic, SingleClass) {
  SyntheticSpec spec;
  spec.n_classes = 1;
  spec.n_examples = 50;
  const auto data = generate_synthetic(spec);
  ASSERT_TRUE(data.has_conditionals());
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_EQ(class_of(data.targets[i]), 1);
    EXPECT_EQ(data.conditionals[i].probs().size(), 1u);
    EXPECT_EQ(data.conditionals[i].probs()[0], 1.0);
  }
}

TEST(Synthetic, BalancedOneDimensionalMixture) {
  SyntheticSpec spec;
  spec.n_classes = 2;
  spec.feature_dim = 1;
  spec.n_examples = 10000;
  spec.seed = 81;
  const auto data = generate_synthetic(spec);
  int ones = 0;
  for (const auto& t : data.targets) ones += class_of(t) == 1 ? 1 : 0;
  const double sigma = std::sqrt(0.25 / 10000.0);
  EXPECT_LE(std::abs(ones / 10000.0 - 0.5), 3.0 * sigma);
}

TEST(Synthetic, PosteriorMatchesBayesRule) {
  SyntheticSpec spec;
  spec.n_classes = 3;
  spec.feature_dim = 2;
  spec.n_examples = 20;
  spec.priors = {0.5, 0.3, 0.2};
  spec.seed = 82;
  const auto data = generate_synthetic(spec);
  const auto means = mixture_means(spec);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto x = data.x(i);
    std::vector<double> joint(3);
    double total = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
      double d2 = 0.0;
      for (std::size_t f = 0; f < 2; ++f) d2 += (x[f] - means[c][f]) * (x[f] - means[c][f]);
      joint[c] = spec.priors[c] * std::exp(-0.5 * d2);
      total += joint[c];
    }
    for (std::size_t c = 0; c < 3; ++c) {
      EXPECT_NEAR(data.conditionals[i].probs()[c], joint[c] / total, 1e-12);
    }
  }
}

TEST(Synthetic, SameSeedSameBytes) {
  TempDir dir;
  SyntheticSpec spec;
  spec.n_examples = 200;
  spec.seed = 83;
  write_dataset_csv(generate_synthetic(spec), dir.file("a.csv"));
  write_dataset_csv(generate_synthetic(spec), dir.file("b.csv"));
  EXPECT_EQ(slurp(dir.file("a.csv")), slurp(dir.file("b.csv")));
  spec.seed = 84;
  write_dataset_csv(generate_synthetic(spec), dir.file("c.csv"));
  EXPECT_NE(slurp(dir.file("a.csv")), slurp(dir.file("c.csv")));
}

TEST(Synthetic, RegressionHasTwoPointConditional) {
  SyntheticSpec spec;
  spec.task = SyntheticTask::Regression;
  spec.n_examples = 30;
  spec.noise = 0.5;
  const auto data = generate_synthetic(spec);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& cond = data.conditionals[i];
    ASSERT_EQ(cond.support().size(), 2u);
    const double lo = std::get<double>(cond.support()[0]);
    const double hi = std::get<double>(cond.support()[1]);
    EXPECT_NEAR(hi - lo, 1.0, 1e-12);
    const double z = std::get<double>(data.targets[i]);
    EXPECT_TRUE(z == lo || z == hi);
  }
}

TEST(Synthetic, RejectsInvalidSpecs) {
  SyntheticSpec spec;
  spec.n_classes = 21;  // more than 2d
  EXPECT_THROW(generate_synthetic(spec), ConfigError);
  spec = SyntheticSpec{};
  spec.priors = {1.0};
  EXPECT_THROW(generate_synthetic(spec), ConfigError);
}

TEST(Experts, PerfectExpertsAreAlwaysRight) {
  SyntheticSpec spec;
  spec.n_examples = 500;
  const auto data = generate_synthetic(spec);
  ExpertPoolSpec pool_spec;
  pool_spec.n_experts = 2;
  pool_spec.p = 1.0;
  std::vector<int> all(10);
  std::iota(all.begin(), all.end(), 1);
  pool_spec.specialties = {all, all};
  const auto pool = generate_experts(data, 10, pool_spec);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto row = pool.predictions.row(data.ids[i]);
    EXPECT_EQ(class_of(row[10]), class_of(data.targets[i]));
    EXPECT_EQ(class_of(row[11]), class_of(data.targets[i]));
  }
}

TEST(Experts, HalfSpecialistAccuracyNearFiftyTwoPercent) {
  SyntheticSpec spec;
  spec.n_examples = 10000;
  spec.seed = 85;
  const auto data = generate_synthetic(spec);
  ExpertPoolSpec pool_spec;
  pool_spec.seed = 86;
  const auto pool = generate_experts(data, 10, pool_spec);
  ASSERT_EQ(pool.set.size(), 16);
  for (int e = 0; e < 6; ++e) {
    int correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto row = pool.predictions.row(data.ids[i]);
      correct += class_of(row[static_cast<std::size_t>(10 + e)]) == class_of(data.targets[i]) ? 1 : 0;
    }
    EXPECT_NEAR(correct / 10000.0, 0.52, 0.015) << "expert " << e + 1;
  }
}

TEST(Experts, FeesAndSpecialties) {
  EXPECT_EQ(default_fees(5), (std::vector<double>{0.05, 0.045, 0.04, 0.035, 0.03}));
  EXPECT_EQ(default_fees(6).back(), 0.025);
  const auto spec = default_specialties(10, 6);
  EXPECT_EQ(spec[0], (std::vector<int>{1, 2, 3, 4, 5}));
  EXPECT_EQ(spec[1], (std::vector<int>{6, 7, 8, 9, 10}));
  EXPECT_EQ(spec[4], spec[0]);
}

TEST(Experts, NoExpertsLeavesLabelsOnly) {
  SyntheticSpec spec;
  spec.n_examples = 10;
  const auto data = generate_synthetic(spec);
  ExpertPoolSpec pool_spec;
  pool_spec.n_experts = 0;
  const auto pool = generate_experts(data, 10, pool_spec);
  EXPECT_EQ(pool.set.size(), 10);
  EXPECT_EQ(pool.set.n_experts(), 0);
}

TEST(Experts, RejectsSpecialtyOutsideLabels) {
  SyntheticSpec spec;
  spec.n_examples = 10;
  const auto data = generate_synthetic(spec);
  ExpertPoolSpec pool_spec;
  pool_spec.n_experts = 1;
  pool_spec.specialties = {{11}};
  EXPECT_THROW(generate_experts(data, 10, pool_spec), ConfigError);
}

TEST(Experts, ModelExpectedCostsMatchMonteCarlo) {
  SyntheticSpec spec;
  spec.n_examples = 40;
  spec.separation = 1.5;
  spec.seed = 87;
  const auto data = generate_synthetic(spec);
  ExpertPoolSpec pool_spec;
  pool_spec.seed = 88;
  const auto pool = generate_experts(data, 10, pool_spec);
  constexpr int draws = 4000;
  for (std::size_t i = 0; i < 5; ++i) {
    const auto& cond = data.conditionals[i];
    const auto mu = model_expected_costs(pool, cond);
    Rng rng(89 + i);
    std::vector<double> sum(mu.size(), 0.0);
    for (int d = 0; d < draws; ++d) {
      // Sample y ~ p(.|x), then each expert's answer from its stated behavior.
      double u = rng.uniform();
      int y = 1;
      for (std::size_t c = 0; c < cond.probs().size(); ++c) {
        if (u < cond.probs()[c]) {
          y = static_cast<int>(c) + 1;
          break;
        }
        u -= cond.probs()[c];
        y = static_cast<int>(c) + 1;
      }
      for (int c = 1; c <= 10; ++c) sum[static_cast<std::size_t>(c - 1)] += c != y ? 1.0 : 0.0;
      for (int e = 0; e < 6; ++e) {
        const double acc = pool.accuracy[static_cast<std::size_t>(e)][static_cast<std::size_t>(y - 1)];
        const double fee = pool.set.at(11 + e).beta;
        sum[static_cast<std::size_t>(10 + e)] += (rng.bernoulli(acc) ? 0.0 : 1.0) + fee;
      }
    }
    for (std::size_t j = 0; j < mu.size(); ++j) {
      const double est = sum[j] / draws;
      const double q = mu[j] - pool.set.at(static_cast<int>(j) + 1).beta;
      const double se = std::sqrt(q * (1.0 - q) / draws);
      // One count of slack covers the lattice when q is near 0 or 1.
      EXPECT_LE(std::abs(est - mu[j]), 3.0 * se + 1.0 / draws)
          << "example " << i << " entity " << j + 1;
    }
  }
}

TEST(Tabular, SplitSizesAndDeterminism) {
  TempDir dir;
  std::string text = "a,b,target\n";
  for (int i = 0; i < 10; ++i) text += std::to_string(i) + "," + std::to_string(i * i) + ",1.5\n";
  write(dir.file("toy.csv"), text);
  TabularSchema schema;
  schema.seed = 5;
  const auto first = load_tabular(dir.file("toy.csv"), schema);
  EXPECT_EQ(first.train.size(), 8u);
  EXPECT_EQ(first.test.size(), 2u);
  const auto again = load_tabular(dir.file("toy.csv"), schema);
  EXPECT_EQ(first.train.ids, again.train.ids);
  EXPECT_EQ(first.test.ids, again.test.ids);
  EXPECT_EQ(first.feature_names, (std::vector<std::string>{"a", "b"}));
  double mean = 0.0;
  for (std::size_t i = 0; i < first.train.size(); ++i) mean += first.train.x(i)[0];
  EXPECT_NEAR(mean / 8.0, 0.0, 1e-12);
}

TEST(Tabular, ConstantColumnWarnsAndZeroes) {
  TempDir dir;
  write(dir.file("c.csv"), "example_id,k,v,target\n1,3,1,0\n2,3,2,1\n3,3,4,0\n4,3,8,1\n5,3,9,1\n");
  const auto data = load_tabular(dir.file("c.csv"), TabularSchema{});
  ASSERT_EQ(data.warnings.size(), 1u);
  EXPECT_NE(data.warnings[0].find("'k'"), std::string::npos);
  for (std::size_t i = 0; i < data.train.size(); ++i) EXPECT_EQ(data.train.x(i)[0], 0.0);
  for (std::size_t i = 0; i < data.test.size(); ++i) EXPECT_EQ(data.test.x(i)[0], 0.0);
}

TEST(Tabular, DistinctErrors) {
  TempDir dir;
  write(dir.file("empty.csv"), "");
  write(dir.file("missing.csv"), "a,b\n1,2\n");
  write(dir.file("text.csv"), "a,target\n1,2\nx,3\n");
  EXPECT_THROW(load_tabular(dir.file("empty.csv"), TabularSchema{}), EmptyFileError);
  EXPECT_THROW(load_tabular(dir.file("missing.csv"), TabularSchema{}), MissingColumnError);
  try {
    load_tabular(dir.file("text.csv"), TabularSchema{});
    FAIL() << "expected NonNumericCellError";
  } catch (const NonNumericCellError& e) {
    EXPECT_NE(std::string(e.what()).find("3"), std::string::npos);  // file line
  }
}

TEST(Files, RoundTrips) {
  TempDir dir;
  SyntheticSpec spec;
  spec.n_examples = 25;
  spec.seed = 90;
  const auto data = generate_synthetic(spec);
  ExpertPoolSpec pool_spec;
  pool_spec.seed = 91;
  const auto pool = generate_experts(data, 10, pool_spec);

  write_dataset_csv(data, dir.file("d.csv"));
  write_conditionals_json(data, dir.file("d.json"));
  write_predictions_csv(pool.predictions, dir.file("p.csv"));
  write_entity_set_json(pool.set, dir.file("e.json"));

  auto loaded = read_dataset_csv(dir.file("d.csv"), OutputKind::Class);
  read_conditionals_json(loaded, dir.file("d.json"));
  EXPECT_EQ(loaded.ids, data.ids);
  EXPECT_EQ(loaded.features, data.features);
  EXPECT_EQ(loaded.targets, data.targets);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto a = loaded.conditionals[i].probs();
    const auto b = data.conditionals[i].probs();
    EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin(), b.end()));
  }

  const auto preds = read_predictions_csv(dir.file("p.csv"), OutputKind::Class);
  ASSERT_EQ(preds.size(), pool.predictions.size());
  for (std::size_t p = 0; p < preds.size(); ++p) {
    const auto a = preds.row_at(p);
    const auto b = pool.predictions.row_at(p);
    EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin(), b.end()));
  }

  const auto set = read_entity_set_json(dir.file("e.json"));
  ASSERT_EQ(set.size(), pool.set.size());
  EXPECT_EQ(set.regime(), pool.set.regime());
  for (int j = 1; j <= set.size(); ++j) {
    EXPECT_EQ(set.at(j).kind, pool.set.at(j).kind);
    EXPECT_EQ(set.at(j).beta, pool.set.at(j).beta);
    EXPECT_EQ(set.at(j).alpha, pool.set.at(j).alpha);
  }
}

TEST(Csv, FormatRoundTrips) {
  Rng rng(92);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.normal() * std::pow(10.0, static_cast<double>(rng.below(20)) - 10.0);
    EXPECT_EQ(*csv::parse_double(csv::format(v)), v);
  }
  EXPECT_FALSE(csv::parse_double("1.5x").has_value());
  EXPECT_FALSE(csv::parse_int("2.0").has_value());
  EXPECT_EQ(csv::split("a,,b"), (std::vector<std::string>{"a", "", "b"}));
}

TEST(SplitPositions, PartitionsAllRows) {
  const auto [train, test] = split_positions(17, 0.8, 3);
  EXPECT_EQ(train.size(), 13u);
  EXPECT_EQ(test.size(), 4u);
  std::vector<std::size_t> all(train);
  all.insert(all.end(), test.begin(), test.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i], i);
}
