#pragma once

// Small differentiable scorers: linear and one-hidden-layer MLP over a flat
// parameter vector, with hand-written backprop and SGD.
//
// Parameter layout (row-major):
//   Linear: W (out x in), b (out)
//   MLP:    W1 (hidden x in), b1 (hidden), W2 (out x hidden), b2 (out)

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace deferkit {

enum class Architecture { Linear, Mlp };
enum class Activation { Tanh, Relu };

std::string to_string(Architecture arch);
Architecture architecture_from_string(const std::string& name);
std::string to_string(Activation act);
Activation activation_from_string(const std::string& name);

struct ModelShape {
  Architecture architecture = Architecture::Linear;
  int input_dim = 1;
  int hidden_dim = 0;  // MLP only
  int output_dim = 1;
  Activation activation = Activation::Tanh;

  std::size_t parameter_count() const;
  void validate() const;
};

class ScoreModel {
 public:
  ScoreModel(ModelShape shape, std::vector<double> theta, std::uint64_t seed = 0);

  // theta ~ uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) per layer, drawn in
  // layout order from a generator seeded with `seed`.
  static ScoreModel initialized(ModelShape shape, std::uint64_t seed);

  const ModelShape& shape() const { return shape_; }
  std::uint64_t seed() const { return seed_; }
  std::span<const double> theta() const { return theta_; }
  std::span<double> mutable_theta() { return theta_; }

  std::vector<double> forward(std::span<const double> x) const;
  void forward(std::span<const double> x, std::span<double> out) const;

  // Adds d(loss)/d(theta) to `grad` given d(loss)/d(scores) = `upstream`.
  // Recomputes the forward activations internally.
  void backward(std::span<const double> x, std::span<const double> upstream,
                std::span<double> grad) const;

  // FNV-1a over the raw parameter bytes; used to check frozen models.
  std::uint64_t checksum() const;

 private:
  void check_input(std::span<const double> x) const;

  ModelShape shape_;
  std::vector<double> theta_;
  std::uint64_t seed_;
};

// One step of SGD with momentum: v <- m v + g, theta <- theta - lr v.
// With m = 0 this is theta - lr g exactly.
class Sgd {
 public:
  Sgd(double learning_rate, double momentum);

  void step(std::span<double> theta, std::span<const double> grad);
  std::span<const double> velocity() const { return velocity_; }

 private:
  double learning_rate_;
  double momentum_;
  std::vector<double> velocity_;
};

nlohmann::json to_json(const ScoreModel& model);
ScoreModel model_from_json(const nlohmann::json& doc);

void save_checkpoint(const ScoreModel& model, const std::string& path);
ScoreModel load_checkpoint(const std::string& path);

}  // namespace deferkit
