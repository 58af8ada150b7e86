#pragma once

#include <iosfwd>
#include <string>

#include "vpstab/scenario.hpp"

namespace vpstab {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitConfig = 2,
    kExitBlowup = 3,
    kExitHypothesis = 4,
    kExitLemma = 5,
};

/// Trajectory and per-snapshot norms (`trajectory.csv`, `norms.csv`).
int cmd_simulate(const ScenarioConfig& cfg, const std::string& out_dir, std::ostream& log);

/// Twin experiment (`stability.csv`, `envelope.csv`, `fit.json`).
int cmd_twin(const ScenarioConfig& cfg, const std::string& out_dir, std::ostream& log);

/// Lemma check by id; writes `verify_<id>.json`. Returns kExitLemma when
/// the check fails.
int cmd_verify(const ScenarioConfig& cfg, const std::string& lemma, const std::string& out_dir, std::ostream& log);

struct BoundArgs {
    double alpha = 1.0;
    double A = 1e-3;
    double c = 1.0;
    double B = -1.0;  ///< negative: no W1 envelope column values
    double C = 1.0;
    double eps = 0.1;
    double T = 1.0;
    double cprime = 1.0;
    double t_max = -1.0;  ///< negative: up to T*
    int rows = 11;
};

/// Envelope table on stdout: `# t_star=`, `# t_star_lower=` comment lines,
/// then `t,G,exp_minus_G,envelope_w1`.
int cmd_bound(const BoundArgs& args, std::ostream& out);

/// Full command-line entry point; never throws.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vpstab
