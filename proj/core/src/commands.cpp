#include "mfg/commands.hpp"

#include <cmath>
#include <filesystem>
#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>

#include "mfg/io.hpp"
#include "mfg/lq_benchmark.hpp"
#include "mfg/particle_system.hpp"
#include "mfg/posterior.hpp"
#include "mfg/rng.hpp"
#include "mfg/rnn_policy.hpp"
#include "mfg/run_config.hpp"
#include "mfg/trainer.hpp"

namespace mfg {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// Window without supply noise in the reference instance.
constexpr double kNoiseFreeUntil = 0.25;

// Loads the config and applies command-line overrides. Returns nullopt after
// reporting the problem.
std::optional<RunConfig> resolve_config(const CommandOptions& options, std::ostream& err) {
  try {
    RunConfig config = options.config_path ? load_config(*options.config_path) : RunConfig{};
    if (options.seed) config.seed = *options.seed;
    if (options.out_dir) config.output_dir = *options.out_dir;
    config.validate();
    return config;
  } catch (const ConfigError& e) {
    err << "invalid config: " << e.what() << "\n";
    return std::nullopt;
  }
}


io::CsvTable posterior_table() {
  return io::CsvTable({"epoch", "mse_eb", "mse_eh", "drift_component", "terminal_component"});
}

void add_posterior_row(io::CsvTable& table, std::size_t epoch, const PosteriorReport& r) {
  table.row()
      .cell(epoch)
      .cell(r.mse_eb)
      .cell(r.mse_eh)
      .cell(r.drift_component)
      .cell(r.terminal_component);
}

void save_checkpoint(const fs::path& path, const RnnParams& params) {
  const std::vector<std::uint8_t> bytes = save_params(params);
  io::write_atomic(path, bytes);
}

std::string step_line(const StepRecord& s) {
  json j = {{"step", s.step},
            {"loss", s.loss},
            {"grad_norm_v", s.grad_norm_v},
            {"grad_norm_pi", s.grad_norm_pi}};
  if (s.clipped_v) j["clipped_v"] = true;
  if (s.clipped_pi) j["clipped_pi"] = true;
  return j.dump() + "\n";
}

std::string epoch_line(const EpochRecord& e) {
  json j = {{"epoch", e.epoch}, {"mse_eb", e.report.mse_eb}, {"mse_eh", e.report.mse_eh}};
  return j.dump() + "\n";
}

double relative_l2(const std::vector<double>& approx, const std::vector<double>& exact,
                   const std::vector<double>& t, double until) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < exact.size(); ++k) {
    if (t[k] > until + 1e-12) continue;
    const double d = approx[k] - exact[k];
    num += d * d;
    den += exact[k] * exact[k];
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace

int cmd_train(const CommandOptions& options, std::ostream& out, std::ostream& err) {
  const std::optional<RunConfig> config = resolve_config(options, err);
  if (!config) return exit_code::kInvalidConfig;

  const MarketModel model = make_model(*config);
  const TrainConfig train_config = make_train_config(*config);
  const fs::path dir = config->output_dir;

  std::string metrics;
  std::string timing;
  io::CsvTable posterior = posterior_table();

  try {
    fs::create_directories(dir);
    io::write_atomic(dir / "config.ini", to_text(*config));

    TrainHooks hooks;
    hooks.on_step = [&](const StepRecord& s) { metrics += step_line(s); };
    hooks.on_epoch = [&](const EpochRecord& e, const RnnParams& control, const RnnParams& price) {
      metrics += epoch_line(e);
      timing += json({{"epoch", e.epoch}, {"seconds", e.seconds}}).dump() + "\n";
      add_posterior_row(posterior, e.epoch, e.report);
      const std::string stem = "epoch_" + std::to_string(e.epoch);
      save_checkpoint(dir / (stem + "_v.ckpt"), control);
      save_checkpoint(dir / (stem + "_pi.ckpt"), price);
      io::write_atomic(dir / "metrics.jsonl", metrics);
      io::write_atomic(dir / "timing.jsonl", timing);
      posterior.save(dir / "posterior.csv");
      out << "epoch " << e.epoch << ": mse_eb=" << e.report.mse_eb
          << " mse_eh=" << e.report.mse_eh << " (" << e.seconds << " s)\n";
    };

    TrainResult result;
    try {
      result = train(model, train_config, hooks);
    } catch (const TrainingAborted& e) {
      io::write_atomic(dir / "metrics.jsonl", metrics);
      err << "training aborted: " << e.what() << "\n";
      return exit_code::kNonFinite;
    }

    save_checkpoint(dir / "final_v.ckpt", result.control);
    save_checkpoint(dir / "final_pi.ckpt", result.price);
    io::write_atomic(dir / "metrics.jsonl", metrics);
    io::write_atomic(dir / "timing.jsonl", timing);
    posterior.save(dir / "posterior.csv");
  } catch (const std::exception& e) {
    err << "train failed: " << e.what() << "\n";
    return exit_code::kFailure;
  }
  return exit_code::kOk;
}

int cmd_evaluate(const CommandOptions& options, std::ostream& out, std::ostream& err) {
  const std::optional<RunConfig> config = resolve_config(options, err);
  if (!config) return exit_code::kInvalidConfig;
  const fs::path dir = config->output_dir;
  const MarketModel model = make_model(*config);

  std::vector<std::string> paths = options.checkpoints;
  if (paths.empty()) {
    paths = {(dir / "final_v.ckpt").string(), (dir / "final_pi.ckpt").string()};
  }

  std::optional<RnnParams> control;
  std::optional<RnnParams> price;
  try {
    for (const std::string& path : paths) {
      RnnParams params = load_params(io::read_bytes(path));
      std::optional<RnnParams>& slot = params.kind == NetworkKind::kControl ? control : price;
      if (slot) {
        err << "more than one " << network_name(params.kind) << " checkpoint given\n";
        return exit_code::kCheckpointMismatch;
      }
      slot = std::move(params);
    }
  } catch (const std::exception& e) {
    err << "cannot load checkpoint: " << e.what() << "\n";
    return exit_code::kCheckpointMismatch;
  }
  if (!control || !price) {
    err << "evaluate needs one control and one price checkpoint\n";
    return exit_code::kCheckpointMismatch;
  }
  const InitialParams reference = initial_params(0);
  if (!control->same_shape(reference.control) || !price->same_shape(reference.price)) {
    err << "checkpoint dimensions do not match the configured networks\n";
    return exit_code::kCheckpointMismatch;
  }

  try {
    const std::size_t samples = options.j_eval.value_or(config->mc_samples);
    if (samples == 0) {
      err << "--j-eval must be positive\n";
      return exit_code::kInvalidConfig;
    }
    ParticleBatch batch = evaluation_batch(model, *control, *price, config->steps,
                                           config->test_agents, samples, config->seed, 0);
    const PosteriorReport report = evaluate_posterior(model, batch);

    fs::create_directories(dir);
    io::CsvTable posterior = posterior_table();
    add_posterior_row(posterior, 0, report);
    posterior.save(dir / "posterior.csv");

    io::CsvTable trajectories(
        {"run_id", "sample_j", "agent_n", "k", "t", "X", "v", "P", "price", "Q"});
    const std::string run_id = "seed" + std::to_string(config->seed);
    for (std::size_t j = 0; j < batch.size(); ++j) {
      const SampleTrajectory& s = batch.samples[j];
      for (std::size_t n = 0; n < s.agents(); ++n) {
        for (std::size_t k = 0; k <= s.steps(); ++k) {
          const auto row = static_cast<Eigen::Index>(n);
          const auto col = static_cast<Eigen::Index>(k);
          trajectories.row()
              .cell(run_id)
              .cell(j)
              .cell(n)
              .cell(k)
              .cell(s.supply.t[k])
              .cell(s.states(row, col))
              .cell(s.controls(row, col))
              .cell(s.adjoints(row, col))
              .cell(s.price[k])
              .cell(s.supply.q[k]);
        }
      }
    }
    trajectories.save(dir / "trajectories.csv");

    json summary = {{"samples", samples},
                    {"agents", config->test_agents},
                    {"steps", config->steps},
                    {"mse_eb", report.mse_eb},
                    {"mse_eh", report.mse_eh},
                    {"certificate", certificate(report)}};

    if (model.lq) {
      const AffineCoefficients coeffs =
          solve_affine_coefficients(model, default_ode_steps(config->steps));
      double overall = 0.0;
      double early = 0.0;
      for (std::size_t j = 0; j < batch.size(); ++j) {
        const SampleTrajectory& s = batch.samples[j];
        const OraclePath oracle =
            oracle_price_path(coeffs, model, s.supply, model.init_mean, config->w0_override);
        overall += relative_l2(s.price, oracle.price_exact, s.supply.t, model.horizon);
        early += relative_l2(s.price, oracle.price_exact, s.supply.t, kNoiseFreeUntil);

        io::CsvTable prices({"k", "t", "Q", "price_rnn", "price_oracle"});
        for (std::size_t k = 0; k <= s.steps(); ++k) {
          prices.row()
              .cell(k)
              .cell(s.supply.t[k])
              .cell(s.supply.q[k])
              .cell(s.price[k])
              .cell(oracle.price_exact[k]);
        }
        prices.save(dir / ("prices_sample_" + std::to_string(j) + ".csv"));
      }
      const double count = static_cast<double>(batch.size());
      summary["price_rel_l2"] = overall / count;
      summary["price_rel_l2_noise_free"] = early / count;
      summary["noise_free_until"] = kNoiseFreeUntil;
    }
    io::write_atomic(dir / "summary.json", summary.dump(2) + "\n");
    out << summary.dump(2) << "\n";
  } catch (const std::exception& e) {
    err << "evaluate failed: " << e.what() << "\n";
    return exit_code::kFailure;
  }
  return exit_code::kOk;
}

int cmd_oracle(const CommandOptions& options, std::ostream& out, std::ostream& err) {
  const std::optional<RunConfig> config = resolve_config(options, err);
  if (!config) return exit_code::kInvalidConfig;
  const MarketModel model = make_model(*config);
  if (!model.lq) {
    err << "oracle: model '" << config->model_kind << "' has no affine price oracle\n";
    return exit_code::kUnsupportedModel;
  }
  const fs::path dir = config->output_dir;
  const std::size_t samples = options.j_eval.value_or(config->mc_samples);

  try {
    const AffineCoefficients coeffs =
        solve_affine_coefficients(model, default_ode_steps(config->steps));
    fs::create_directories(dir);

    io::CsvTable table({"i", "t", "a", "b", "c", "gain"});
    for (std::size_t i = 0; i <= coeffs.steps(); ++i) {
      table.row()
          .cell(i)
          .cell(coeffs.t[i])
          .cell(coeffs.a[i])
          .cell(coeffs.b[i])
          .cell(coeffs.c[i])
          .cell(coeffs.gain[i]);
    }
    table.save(dir / "oracle_coeffs.csv");

    // Same draws as evaluation_batch for epoch 0: population first, then
    // one supply path per sample.
    Rng rng = Rng::stream(config->seed, Stream::kEval, 0);
    sample_initial(model, config->test_agents, rng);
    for (std::size_t j = 0; j < samples; ++j) {
      const SupplyPath supply = simulate_supply(model, config->steps, rng);
      const OraclePath path =
          oracle_price_path(coeffs, model, supply, model.init_mean, config->w0_override);
      io::CsvTable csv({"k", "t", "Q", "mean_state", "price_exact", "price_simulated"});
      for (std::size_t k = 0; k < path.t.size(); ++k) {
        csv.row()
            .cell(k)
            .cell(path.t[k])
            .cell(path.supply[k])
            .cell(path.mean_state[k])
            .cell(path.price_exact[k])
            .cell(path.price_simulated[k]);
      }
      csv.save(dir / ("oracle_sample_" + std::to_string(j) + ".csv"));
    }
    out << "w0 = " << io::format_double(coeffs.w0) << ", " << samples << " paths written to "
        << dir.string() << "\n";
  } catch (const std::exception& e) {
    err << "oracle failed: " << e.what() << "\n";
    return exit_code::kFailure;
  }
  return exit_code::kOk;
}

int cmd_grad_check(const CommandOptions& options, std::ostream& out, std::ostream& err) {
  const std::optional<RunConfig> config = resolve_config(options, err);
  if (!config) return exit_code::kInvalidConfig;
  constexpr std::size_t kAgents = 2;
  constexpr std::size_t kSteps = 5;
  constexpr double kStep = 1e-6;
  constexpr double kTolerance = 1e-5;

  try {
    const MarketModel model = make_model(*config);
    const InitialParams init = initial_params(config->seed);
    Rng population = Rng::stream(config->seed, Stream::kPopulation, 0);
    Rng supply_rng = Rng::stream(config->seed, Stream::kSupply, 0);
    const std::vector<double> x0 = sample_initial(model, kAgents, population);
    const SupplyPath supply = simulate_supply(model, kSteps, supply_rng);

    bool ok = true;
    for (NetworkKind kind : {NetworkKind::kControl, NetworkKind::kPrice}) {
      const ad::GradCheckResult r =
          check_loss_gradient(model, init.control, init.price, kind, x0, supply, kStep);
      const bool pass = r.max_relative_error <= kTolerance;
      ok = ok && pass;
      out << network_name(kind) << ": max relative error " << r.max_relative_error
          << " (tensor " << r.worst_parameter << ", entry " << r.worst_entry << ", analytic "
          << r.analytic << ", numeric " << r.numeric << ") " << (pass ? "PASS" : "FAIL")
          << "\n";
      if (!pass) {
        // Rounding of the loss limits what a double central difference can
        // resolve.
        const double resolution =
            std::numeric_limits<double>::epsilon() * std::abs(r.loss) / kStep;
        out << "  |analytic - numeric| = " << std::abs(r.analytic - r.numeric)
            << ", double difference resolution ~ " << resolution << "\n";
      }
    }
    return ok ? exit_code::kOk : exit_code::kFailure;
  } catch (const std::exception& e) {
    err << "grad-check failed: " << e.what() << "\n";
    return exit_code::kFailure;
  }
}

}  // namespace mfg
