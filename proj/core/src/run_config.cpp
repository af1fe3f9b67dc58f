#include "mfg/run_config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "mfg/io.hpp"

namespace mfg {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void fail(const std::string& key, const std::string& why) {
  throw ConfigError(key + ": " + why);
}

double to_double(const std::string& key, std::string_view v) {
  double out = 0.0;
  auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size() || !std::isfinite(out)) {
    fail(key, "expected a finite number, got '" + std::string(v) + "'");
  }
  return out;
}

template <typename Int>
Int to_integer(const std::string& key, std::string_view v) {
  Int out = 0;
  auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size()) {
    fail(key, "expected a non-negative integer, got '" + std::string(v) + "'");
  }
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, std::string_view)>;

Setter real(double RunConfig::*field) {
  return [field](RunConfig& c, const std::string& k, std::string_view v) {
    c.*field = to_double(k, v);
  };
}

Setter count(std::size_t RunConfig::*field) {
  return [field](RunConfig& c, const std::string& k, std::string_view v) {
    c.*field = to_integer<std::size_t>(k, v);
  };
}

Setter text(std::string RunConfig::*field) {
  return [field](RunConfig& c, const std::string&, std::string_view v) {
    c.*field = std::string(v);
  };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"run.seed",
       [](RunConfig& c, const std::string& k, std::string_view v) {
         c.seed = to_integer<std::uint64_t>(k, v);
       }},
      {"run.output_dir", text(&RunConfig::output_dir)},
      {"model.kind", text(&RunConfig::model_kind)},
      {"model.lambda_x", real(&RunConfig::lambda_x)},
      {"model.x_ref", real(&RunConfig::x_ref)},
      {"model.lambda_t", real(&RunConfig::lambda_t)},
      {"model.init_mean", real(&RunConfig::init_mean)},
      {"model.init_std", real(&RunConfig::init_std)},
      {"model.horizon", real(&RunConfig::horizon)},
      {"model.q0", real(&RunConfig::q0)},
      {"model.supply", text(&RunConfig::supply)},
      {"model.supply_noise", real(&RunConfig::supply_noise)},
      {"model.w0_override",
       [](RunConfig& c, const std::string& k, std::string_view v) {
         c.w0_override = to_double(k, v);
       }},
      {"discretization.steps", count(&RunConfig::steps)},
      {"training.iterations", count(&RunConfig::iterations)},
      {"training.epoch_size", count(&RunConfig::epoch_size)},
      {"training.train_agents", count(&RunConfig::train_agents)},
      {"training.test_agents", count(&RunConfig::test_agents)},
      {"training.mc_samples", count(&RunConfig::mc_samples)},
      {"training.control_learning_rate", real(&RunConfig::control_learning_rate)},
      {"training.price_learning_rate", real(&RunConfig::price_learning_rate)},
      {"training.beta1", real(&RunConfig::beta1)},
      {"training.beta2", real(&RunConfig::beta2)},
      {"training.adam_epsilon", real(&RunConfig::adam_epsilon)},
      {"training.clip_norm", real(&RunConfig::clip_norm)},
  };
  return table;
}

}  // namespace

void RunConfig::validate() const {
  if (model_kind != "lq" && model_kind != "cosh") fail("model.kind", "must be 'lq' or 'cosh'");
  if (lambda_x < 0.0) fail("model.lambda_x", "must be non-negative");
  if (lambda_t < 0.0) fail("model.lambda_t", "must be non-negative");
  if (init_std < 0.0) fail("model.init_std", "must be non-negative");
  if (!(horizon > 0.0)) fail("model.horizon", "must be positive");
  if (supply != "seasonal" && supply != "zero") fail("model.supply", "must be 'seasonal' or 'zero'");
  if (supply_noise < 0.0) fail("model.supply_noise", "must be non-negative");
  if (output_dir.empty()) fail("run.output_dir", "must not be empty");
  if (steps < 1) fail("discretization.steps", "must be at least 1");
  if (epoch_size < 1) fail("training.epoch_size", "must be at least 1");
  if (iterations % epoch_size != 0) fail("training.iterations", "must be a multiple of epoch_size");
  if (train_agents < 1) fail("training.train_agents", "must be at least 1");
  if (test_agents < 1) fail("training.test_agents", "must be at least 1");
  if (mc_samples < 1) fail("training.mc_samples", "must be at least 1");
  auto rate = [](const char* key, double v) {
    if (!(v >= 0.0 && v < 1.0)) fail(key, "must lie in [0, 1)");
  };
  rate("training.control_learning_rate", control_learning_rate);
  rate("training.price_learning_rate", price_learning_rate);
  if (!(beta1 > 0.0 && beta1 < 1.0)) fail("training.beta1", "must lie in (0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) fail("training.beta2", "must lie in (0, 1)");
  if (!(adam_epsilon > 0.0)) fail("training.adam_epsilon", "must be positive");
}

RunConfig parse_config(std::string_view input) {
  RunConfig config;
  std::string section;
  std::size_t line_no = 0;
  std::map<std::string, std::size_t> seen;
  std::size_t pos = 0;
  while (pos <= input.size()) {
    const auto eol = input.find('\n', pos);
    std::string_view line =
        input.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? input.size() + 1 : eol + 1;
    ++line_no;

    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;

    const std::string where = "line " + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') fail(where, "malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section != "run" && section != "model" && section != "discretization" &&
          section != "training") {
        fail(where, "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(where, "expected 'key = value'");
    if (section.empty()) fail(where, "key outside of a section");
    const std::string key = section + "." + std::string(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));

    const auto it = setters().find(key);
    if (it == setters().end()) fail(key, "unknown key");
    if (seen.count(key)) fail(key, "given twice (lines " + std::to_string(seen[key]) + " and " +
                                       std::to_string(line_no) + ")");
    seen[key] = line_no;
    if (value.empty()) fail(key, "missing value");
    it->second(config, key, value);
  }
  config.validate();
  return config;
}

RunConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = io::read_text(path);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return parse_config(text);
}

std::string to_text(const RunConfig& c) {
  using io::format_double;
  std::ostringstream out;
  out << "[run]\n"
      << "seed = " << c.seed << "\n"
      << "output_dir = " << c.output_dir << "\n\n"
      << "[model]\n"
      << "kind = " << c.model_kind << "\n"
      << "lambda_x = " << format_double(c.lambda_x) << "\n"
      << "x_ref = " << format_double(c.x_ref) << "\n"
      << "lambda_t = " << format_double(c.lambda_t) << "\n"
      << "init_mean = " << format_double(c.init_mean) << "\n"
      << "init_std = " << format_double(c.init_std) << "\n"
      << "horizon = " << format_double(c.horizon) << "\n"
      << "q0 = " << format_double(c.q0) << "\n"
      << "supply = " << c.supply << "\n"
      << "supply_noise = " << format_double(c.supply_noise) << "\n";
  if (c.w0_override) out << "w0_override = " << format_double(*c.w0_override) << "\n";
  out << "\n[discretization]\n"
      << "steps = " << c.steps << "\n\n"
      << "[training]\n"
      << "iterations = " << c.iterations << "\n"
      << "epoch_size = " << c.epoch_size << "\n"
      << "train_agents = " << c.train_agents << "\n"
      << "test_agents = " << c.test_agents << "\n"
      << "mc_samples = " << c.mc_samples << "\n"
      << "control_learning_rate = " << format_double(c.control_learning_rate) << "\n"
      << "price_learning_rate = " << format_double(c.price_learning_rate) << "\n"
      << "beta1 = " << format_double(c.beta1) << "\n"
      << "beta2 = " << format_double(c.beta2) << "\n"
      << "adam_epsilon = " << format_double(c.adam_epsilon) << "\n"
      << "clip_norm = " << format_double(c.clip_norm) << "\n";
  return out.str();
}

MarketModel make_model(const RunConfig& c) {
  MarketModel m = c.model_kind == "cosh" ? cosh_model(c.lambda_x, c.x_ref, c.lambda_t)
                                         : lq_model(c.lambda_x, c.x_ref, c.lambda_t);
  m.init_mean = c.init_mean;
  m.init_std = c.init_std;
  m.horizon = c.horizon;
  m.q0 = c.q0;
  set_supply(m, c.supply == "zero" ? zero_supply() : seasonal_supply(c.supply_noise));
  return m;
}

TrainConfig make_train_config(const RunConfig& c) {
  TrainConfig t;
  t.iterations = c.iterations;
  t.epoch_size = c.epoch_size;
  t.steps = c.steps;
  t.train_agents = c.train_agents;
  t.test_agents = c.test_agents;
  t.mc_samples = c.mc_samples;
  t.control_optimizer = {c.control_learning_rate, c.beta1, c.beta2, c.adam_epsilon};
  t.price_optimizer = {c.price_learning_rate, c.beta1, c.beta2, c.adam_epsilon};
  t.clip_norm = c.clip_norm;
  t.seed = c.seed;
  return t;
}

}  // namespace mfg
