#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "vpstab/bounds.hpp"
#include "vpstab/ensemble.hpp"
#include "vpstab/flow.hpp"
#include "vpstab/kernel.hpp"
#include "vpstab/orlicz.hpp"
#include "vpstab/transport.hpp"

namespace vpstab {

enum class Generator { UniformDisk, TwoStream, GaussianVelocity };

struct InitialSpec {
    Generator generator = Generator::UniformDisk;
    int dim = 2;
    std::size_t n = 1000;
    double mass = 1.0;
    double radius = 1.0;           ///< disk/ball radius, or half-width of the two-stream box
    double velocity_spread = 0.0;  ///< Gaussian velocity σ
    double stream_speed = 1.0;     ///< ±u along the first axis (two-stream)
};

enum class FieldKind { Newton, Sin, Free };

struct KernelConfig {
    FieldKind kind = FieldKind::Newton;
    int sign = 1;
    double softening = -1.0;  ///< negative selects default_softening
};

struct TwinSpec {
    double dx = 1e-4;
    double dv = 0.0;
};

struct EnvelopeConfig {
    bool fit = true;
    double C = 1.0;
    double c = 1.0;
    double eps = 0.1;
    double cprime = 1.0;
};

struct VerifyConfig {
    std::string density = "borderline";
    double density_alpha = 1.0;
    double r_min = 1e-6;
    double r_max = 1e-2;
    int separations = 20;
    int directions = 10;
    double slope_min = -0.05;
    double slope_max = 0.05;
    double moment_c = 0.1;
    double stability_tol = 0.25;
    double rho_slope_tol = 0.05;
    double h_min = 1e-4;
    double h_max = 1e-1;
};

struct TransportConfig {
    std::size_t cap = 4096;
    double sinkhorn_reg = 1e-3;
    int sinkhorn_iter = 500;
    std::size_t sinkhorn_max_atoms = 3000;  ///< per side; larger clouds skip Sinkhorn
    std::uint64_t subsample_seed = 7;
};

struct ScenarioConfig {
    std::uint64_t seed = 0;
    std::string out = "out";
    InitialSpec initial;
    KernelConfig kernel;
    FlowConfig flow;
    TwinSpec twin;
    OrliczIndex idx = OrliczIndex::make(1.0);
    double histogram_h = 0.1;
    double p_max = 200.0;
    EnvelopeConfig envelope;
    VerifyConfig verify;
    TransportConfig transport;
    std::string hash;  ///< FNV-1a of the source text (and any seed override)
};

/// 64-bit FNV-1a as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view data);

/// Parses the INI text. Unknown sections or keys, malformed numbers and
/// out-of-range values raise ConfigError naming `section.key` and its line.
/// `run.seed` is mandatory unless `seed_override` is given.
ScenarioConfig parse_config(const std::string& text, const std::uint64_t* seed_override = nullptr);
ScenarioConfig load_config(const std::string& path, const std::uint64_t* seed_override = nullptr);

PhaseEnsemble generate_initial(const InitialSpec& spec, std::uint64_t seed);

/// Independent uniform noise in [-dx, dx] on each position component and
/// [-dv, dv] on each velocity component.
PhaseEnsemble perturb(const PhaseEnsemble& ens, const TwinSpec& twin, std::uint64_t seed);

/// Field model of the scenario; automatic softening is resolved from `ens`.
FieldModel make_field_model(const KernelConfig& k, const PhaseEnsemble& ens);

}  // namespace vpstab
