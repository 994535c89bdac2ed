#include "deferkit/models.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "deferkit/error.hpp"
#include "deferkit/random.hpp"

namespace deferkit {

std::string to_string(Architecture arch) { return arch == Architecture::Linear ? "linear" : "mlp"; }

Architecture architecture_from_string(const std::string& name) {
  if (name == "linear") return Architecture::Linear;
  if (name == "mlp") return Architecture::Mlp;
  throw ConfigError("architecture", "unknown architecture '" + name + "'");
}

std::string to_string(Activation act) { return act == Activation::Tanh ? "tanh" : "relu"; }

Activation activation_from_string(const std::string& name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::Relu;
  throw ConfigError("activation", "unknown activation '" + name + "'");
}

std::size_t ModelShape::parameter_count() const {
  const auto in = static_cast<std::size_t>(input_dim);
  const auto out = static_cast<std::size_t>(output_dim);
  if (architecture == Architecture::Linear) return out * in + out;
  const auto h = static_cast<std::size_t>(hidden_dim);
  return h * in + h + out * h + out;
}

void ModelShape::validate() const {
  if (input_dim < 1) throw ArgumentError("model input_dim must be >= 1");
  if (output_dim < 1) throw ArgumentError("model output_dim must be >= 1");
  if (architecture == Architecture::Mlp && hidden_dim < 1) {
    throw ArgumentError("MLP hidden_dim must be >= 1");
  }
}

ScoreModel::ScoreModel(ModelShape shape, std::vector<double> theta, std::uint64_t seed)
    : shape_(shape), theta_(std::move(theta)), seed_(seed) {
  shape_.validate();
  if (shape_.architecture == Architecture::Linear) shape_.hidden_dim = 0;
  if (theta_.size() != shape_.parameter_count()) {
    throw ArgumentError("parameter vector has " + std::to_string(theta_.size()) +
                        " entries, architecture needs " +
                        std::to_string(shape_.parameter_count()));
  }
  for (double t : theta_) {
    if (!std::isfinite(t)) throw ArgumentError("model parameters must be finite");
  }
}

ScoreModel ScoreModel::initialized(ModelShape shape, std::uint64_t seed) {
  shape.validate();
  Rng rng(seed);
  std::vector<double> theta;
  theta.reserve(shape.parameter_count());
  auto fill = [&](std::size_t count, int fan_in) {
    const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = 0; i < count; ++i) theta.push_back(rng.uniform(-s, s));
  };
  const auto in = static_cast<std::size_t>(shape.input_dim);
  const auto out = static_cast<std::size_t>(shape.output_dim);
  if (shape.architecture == Architecture::Linear) {
    fill(out * in + out, shape.input_dim);
  } else {
    const auto h = static_cast<std::size_t>(shape.hidden_dim);
    fill(h * in + h, shape.input_dim);
    fill(out * h + out, shape.hidden_dim);
  }
  return ScoreModel(shape, std::move(theta), seed);
}

void ScoreModel::check_input(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != shape_.input_dim) {
    throw ArgumentError("feature vector has dimension " + std::to_string(x.size()) +
                        ", model expects " + std::to_string(shape_.input_dim));
  }
}

namespace {

// y = W x + b with W (rows x cols) starting at `w`, b right after it.
void affine(const double* w, std::size_t rows, std::size_t cols, std::span<const double> x,
            std::span<double> y) {
  const double* b = w + rows * cols;
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = b[r];
    const double* wr = w + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
    y[r] = acc;
  }
}

double activate(Activation act, double z) { return act == Activation::Tanh ? std::tanh(z) : (z > 0.0 ? z : 0.0); }

// Derivative expressed through the pre-activation z and output a.
double activate_slope(Activation act, double z, double a) {
  return act == Activation::Tanh ? 1.0 - a * a : (z > 0.0 ? 1.0 : 0.0);
}

}  // namespace

std::vector<double> ScoreModel::forward(std::span<const double> x) const {
  std::vector<double> out(static_cast<std::size_t>(shape_.output_dim));
  forward(x, out);
  return out;
}

void ScoreModel::forward(std::span<const double> x, std::span<double> out) const {
  check_input(x);
  if (static_cast<int>(out.size()) != shape_.output_dim) {
    throw ArgumentError("score buffer has the wrong length");
  }
  const auto in = static_cast<std::size_t>(shape_.input_dim);
  const auto o = static_cast<std::size_t>(shape_.output_dim);
  if (shape_.architecture == Architecture::Linear) {
    affine(theta_.data(), o, in, x, out);
    return;
  }
  const auto h = static_cast<std::size_t>(shape_.hidden_dim);
  std::vector<double> hidden(h);
  affine(theta_.data(), h, in, x, hidden);
  for (double& v : hidden) v = activate(shape_.activation, v);
  affine(theta_.data() + h * in + h, o, h, hidden, out);
}

void ScoreModel::backward(std::span<const double> x, std::span<const double> upstream,
                          std::span<double> grad) const {
  check_input(x);
  if (static_cast<int>(upstream.size()) != shape_.output_dim) {
    throw ArgumentError("upstream gradient has the wrong length");
  }
  if (grad.size() != theta_.size()) throw ArgumentError("gradient buffer has the wrong length");
  const auto in = static_cast<std::size_t>(shape_.input_dim);
  const auto o = static_cast<std::size_t>(shape_.output_dim);

  auto accumulate_affine = [](double* gw, std::size_t rows, std::size_t cols,
                              std::span<const double> input, std::span<const double> up) {
    double* gb = gw + rows * cols;
    for (std::size_t r = 0; r < rows; ++r) {
      if (up[r] == 0.0) continue;
      double* gr = gw + r * cols;
      for (std::size_t c = 0; c < cols; ++c) gr[c] += up[r] * input[c];
      gb[r] += up[r];
    }
  };

  if (shape_.architecture == Architecture::Linear) {
    accumulate_affine(grad.data(), o, in, x, upstream);
    return;
  }
  const auto h = static_cast<std::size_t>(shape_.hidden_dim);
  std::vector<double> pre(h);
  affine(theta_.data(), h, in, x, pre);
  std::vector<double> hidden(h);
  for (std::size_t i = 0; i < h; ++i) hidden[i] = activate(shape_.activation, pre[i]);

  const std::size_t second = h * in + h;
  accumulate_affine(grad.data() + second, o, h, hidden, upstream);

  const double* w2 = theta_.data() + second;
  std::vector<double> delta(h, 0.0);
  for (std::size_t r = 0; r < o; ++r) {
    if (upstream[r] == 0.0) continue;
    const double* row = w2 + r * h;
    for (std::size_t i = 0; i < h; ++i) delta[i] += upstream[r] * row[i];
  }
  for (std::size_t i = 0; i < h; ++i) {
    delta[i] *= activate_slope(shape_.activation, pre[i], hidden[i]);
  }
  accumulate_affine(grad.data(), h, in, x, delta);
}

std::uint64_t ScoreModel::checksum() const {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (double t : theta_) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &t, sizeof(double));
    for (unsigned char b : bytes) {
      hash ^= b;
      hash *= 0x100000001b3ULL;
    }
  }
  return hash;
}

Sgd::Sgd(double learning_rate, double momentum)
    : learning_rate_(learning_rate), momentum_(momentum) {
  if (!std::isfinite(learning_rate) || learning_rate < 0.0) {
    throw ConfigError("learning_rate", "must be finite and >= 0");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum", "must lie in [0, 1)");
}

void Sgd::step(std::span<double> theta, std::span<const double> grad) {
  if (theta.size() != grad.size()) throw ArgumentError("sgd_step: shape mismatch");
  if (velocity_.empty()) velocity_.assign(theta.size(), 0.0);
  if (velocity_.size() != theta.size()) throw ArgumentError("sgd_step: parameter count changed");
  for (std::size_t i = 0; i < theta.size(); ++i) {
    velocity_[i] = momentum_ * velocity_[i] + grad[i];
    theta[i] -= learning_rate_ * velocity_[i];
  }
}

nlohmann::json to_json(const ScoreModel& model) {
  const auto& s = model.shape();
  nlohmann::json doc;
  doc["architecture"] = to_string(s.architecture);
  doc["dims"] = {{"input", s.input_dim}, {"hidden", s.hidden_dim}, {"output", s.output_dim}};
  doc["activation"] = to_string(s.activation);
  doc["seed"] = model.seed();
  doc["theta"] = std::vector<double>(model.theta().begin(), model.theta().end());
  return doc;
}

ScoreModel model_from_json(const nlohmann::json& doc) {
  try {
    ModelShape shape;
    shape.architecture = architecture_from_string(doc.at("architecture").get<std::string>());
    const auto& dims = doc.at("dims");
    shape.input_dim = dims.at("input").get<int>();
    shape.hidden_dim = dims.value("hidden", 0);
    shape.output_dim = dims.at("output").get<int>();
    shape.activation = activation_from_string(doc.value("activation", std::string("tanh")));
    return ScoreModel(shape, doc.at("theta").get<std::vector<double>>(),
                      doc.value("seed", std::uint64_t{0}));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("checkpoint", std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const ScoreModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("checkpoint", "cannot write " + path);
  out << to_json(model).dump(1) << '\n';
}

ScoreModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("checkpoint", "cannot read " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("checkpoint", path + ": " + e.what());
  }
  return model_from_json(doc);
}

}  // namespace deferkit
