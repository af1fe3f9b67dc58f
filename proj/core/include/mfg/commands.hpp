#pragma once

// Subcommand bodies of the command-line runner. Each returns a process exit
// code and writes diagnostics to `err`.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace mfg {

namespace exit_code {
constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kInvalidConfig = 2;
constexpr int kNonFinite = 3;
constexpr int kCheckpointMismatch = 4;
constexpr int kUnsupportedModel = 5;
}  // namespace exit_code

struct CommandOptions {
  std::optional<std::string> config_path;  // defaults apply when absent
  std::optional<std::uint64_t> seed;       // overrides [run] seed
  std::optional<std::string> out_dir;      // overrides [run] output_dir
  std::vector<std::string> checkpoints;    // evaluate: control and price files
  std::optional<std::size_t> j_eval;       // evaluate/oracle: number of paths
};

// Writes config.ini, metrics.jsonl, timing.jsonl, posterior.csv,
// epoch_<e>_{v,pi}.ckpt and final_{v,pi}.ckpt into the output directory.
int cmd_train(const CommandOptions& options, std::ostream& out, std::ostream& err);

// Loads the control and price checkpoints (by default final_{v,pi}.ckpt in
// the output directory), evaluates them on the eval stream 0 and writes
// posterior.csv, trajectories.csv and, for the LQ model,
// prices_sample_<j>.csv and summary.json.
int cmd_evaluate(const CommandOptions& options, std::ostream& out, std::ostream& err);

// Writes oracle_coeffs.csv and oracle_sample_<j>.csv for the LQ model.
// Supply paths are the ones cmd_evaluate uses.
int cmd_oracle(const CommandOptions& options, std::ostream& out, std::ostream& err);

// Checks the adversarial loss gradients of freshly initialised networks
// against central differences on a 2-agent, 5-step instance.
int cmd_grad_check(const CommandOptions& options, std::ostream& out, std::ostream& err);

}  // namespace mfg
