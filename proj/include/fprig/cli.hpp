#pragma once

// `fprig` command line: serve, sim run, exp run, exp estimate, verify, export.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fprig {

enum ExitCode : int {
  kExitOk = 0,
  kExitVerifyFailed = 1,
  kExitStartup = 2,
  kExitNotFound = 3,
  kExitValidation = 4,
};

struct CliConfig {
  std::filesystem::path data_dir = "fprig-data";
  int port = 8080;
  std::string attest_url;  // empty: attestation service hosted in-process on the data dir
  std::uint64_t seed = 0;
};

struct CliFlags {
  std::optional<std::string> data_dir;
  std::optional<int> port;
  std::optional<std::string> attest_url;
  std::optional<std::uint64_t> seed;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_env();

// flag > FPRIG_* environment variable > default. Error(validation) on a bad env value.
CliConfig resolve_cli_config(const CliFlags& flags, const EnvLookup& env);

// Attestation log kept next to the sessions when no remote service is configured.
std::filesystem::path attestation_store_path(const CliConfig& config);

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
             const EnvLookup& env = process_env());

}  // namespace fprig
