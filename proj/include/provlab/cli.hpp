#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "provlab/keyselect.hpp"
#include "provlab/runconfig.hpp"
#include "provlab/sha256.hpp"

namespace provlab {

// Parsed command line: one subcommand plus its flags. Shared flags:
//   --config PATH   run-configuration file (defaults apply when omitted)
//   --seed INT      overrides the config's master seed
//   --out DIR       overrides the config's output directory
//   --jobs INT      overrides the config's worker count
//   --exit-on-infringe   exit 2 when the verdict is infringing
// The PROVLAB_OUT environment variable is the output-directory fallback when
// neither --out nor the config names one. Exit codes: 0 ok, 1 error,
// 2 infringing verdict under --exit-on-infringe.
struct CliArgs {
    std::string command;
    std::string config_path;
    std::optional<uint64_t> seed;
    std::string out_dir;
    std::optional<uint32_t> jobs;
    bool exit_on_infringe = false;
    bool help = false;

    // command-specific
    std::optional<float> rho;          // build-suspect
    std::string strategy;              // select-keys
    std::string source_name;           // defaults to "source"
    std::string suspect_name;          // attribute
    std::string keys_name;             // attribute
    std::string discriminator_name;    // attribute --level statistical
    std::string level;                 // attribute: instance | statistical
    std::string suite;                 // experiment
};

// Throws std::invalid_argument on unknown commands, unknown flags, missing
// flag values, or malformed numbers.
CliArgs parse_cli_args(int argc, const char* const* argv);

// Config file (when given) + flag overrides + PROVLAB_OUT fallback for the
// output directory. `env_out` is the value of PROVLAB_OUT (null when unset).
// Throws when no output directory is specified anywhere.
RunConfig resolve_config(const CliArgs& args, const char* env_out);

// What a command produced: the one-line stdout summary, the primary output
// artifact (store name + digest), and whether the verdict was infringing.
struct CommandOutcome {
    std::string summary;
    std::string artifact;
    Digest digest{};
    bool infringing = false;
};

// The five commands. Each opens the artifact store under cfg.out_dir, writes
// its outputs through it, and returns the summary line. Referenced input
// artifacts must exist and digest-verify; missing prerequisites are an error
// except in train-source and experiment, which build and store what they
// need deterministically from the config.
CommandOutcome cmd_train_source(const RunConfig& cfg);
CommandOutcome cmd_build_suspect(const RunConfig& cfg, float rho,
                                 const std::string& source_name,
                                 const std::string& suspect_name = "");
CommandOutcome cmd_select_keys(const RunConfig& cfg, KeyStrategy strategy,
                               const std::string& source_name);
CommandOutcome cmd_attribute(const RunConfig& cfg, const std::string& source_name,
                             const std::string& suspect_name, const std::string& keys_name,
                             const std::string& level,
                             const std::string& discriminator_name);
CommandOutcome cmd_experiment(const RunConfig& cfg, const std::string& suite);

// Usage text for --help and argument errors.
std::string cli_usage();

// Full entry point: parse, resolve, dispatch, print the summary (stdout) or
// the error (stderr), and map the outcome to an exit code.
int run_cli(int argc, const char* const* argv);

}  // namespace provlab
