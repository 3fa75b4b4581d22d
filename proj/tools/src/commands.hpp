#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "config.hpp"

namespace rwlab::app {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfig = 2,
  kResource = 3,
  kStatistical = 4,
};

// Each command writes its artifact to `out`; the config is assumed valid.
void cmd_qd(const ExperimentConfig& cfg, std::ostream& out);
void cmd_predict(const ExperimentConfig& cfg, std::ostream& out);
void cmd_annealed(const ExperimentConfig& cfg, std::ostream& out);
void cmd_quenched(const ExperimentConfig& cfg, std::ostream& out);
void cmd_scan(const ExperimentConfig& cfg, std::ostream& out);
void cmd_certify(const ExperimentConfig& cfg, std::ostream& out);
void cmd_perc(const ExperimentConfig& cfg, std::ostream& out);
void cmd_events(const ExperimentConfig& cfg, std::ostream& out);
void cmd_oracle(const ExperimentConfig& cfg, std::ostream& out);

/// Parses argv (without the program name), loads --config, applies flag
/// overrides, validates and dispatches. Errors go to `err`; the return value
/// is the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rwlab::app
