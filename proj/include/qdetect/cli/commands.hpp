#pragma once

#include <iosfwd>

#include "qdetect/cli/run_config.hpp"

namespace qdetect::cli {

// Each command writes CSV files into cfg.out, reports on `out`, sends
// warnings and failures to `err`, and returns the process exit code.
// Configuration errors surface as std::invalid_argument.

int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_mfdt_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_fdp(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_darkstates(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_roots(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Cross-module consistency chain. Thresholds are multiplied by
/// cfg.tolerance_scale; each invariant prints one PASS/FAIL line.
int cmd_validate(const RunConfig& cfg, std::ostream& out, std::ostream& err);

}  // namespace qdetect::cli
