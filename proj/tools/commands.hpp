#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spdens/config.hpp"

namespace spdens::cli {

enum ExitCode : int { kSuccess = 0, kCheckFailed = 1, kUsageError = 2 };

struct RunOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  int threads = 1;
  /// simulate: draw from the Gaussian law of the linear solution instead of the lattice.
  bool exact = false;
  /// density: samples CSV; defaults to <out>/samples.csv.
  std::optional<std::string> samples;
};

/// Output directory plus the list of files written, for the manifest.
class RunContext {
 public:
  RunContext(std::string command, const RunOptions& opts);

  const ExperimentConfig& config() const { return cfg_; }
  const RunOptions& options() const { return opts_; }
  const std::filesystem::path& out_dir() const { return out_; }

  void emit(const std::string& name, const std::string& content);
  /// <command>.manifest.json: config hash, effective config, seed, threads, versions, output hashes.
  void write_manifest(int exit_code) const;

 private:
  std::string command_;
  RunOptions opts_;
  ExperimentConfig cfg_;
  std::string config_text_;
  std::filesystem::path out_;
  std::vector<std::pair<std::string, std::string>> outputs_;  // name, sha256
};

std::string sha256_hex(const std::string& data);

int cmd_verify(RunContext& ctx);
int cmd_fit(RunContext& ctx);
int cmd_simulate(RunContext& ctx);
int cmd_density(RunContext& ctx);
/// Summarises the JSON reports found in the output directory.
int cmd_report(const std::filesystem::path& out_dir);

}  // namespace spdens::cli
