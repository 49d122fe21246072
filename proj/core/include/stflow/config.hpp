#pragma once

#include "stflow/drift.hpp"
#include "stflow/linalg.hpp"
#include "stflow/moduli.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace stflow {

enum class ExperimentKind {
    PdeSolve,
    LambdaSweep,
    FlowSim,
    FlowModulus,
    MollifyConvergence,
    Transport,
    WeakResidual,
    NonuniquenessDemo,
    ModulusVerify,
};

const char* to_string(ExperimentKind k) noexcept;
/// Throws ValidationError("experiment.kind") for unknown names.
ExperimentKind parse_kind(const std::string& name);
const std::vector<std::string>& experiment_kinds();

struct DriftConfig {
    std::string family = "zero";
    std::vector<double> value;  ///< constant drift
    double rate = 1.0;          ///< ou
    double alpha = 0.5;         ///< holder, signed-power, log-modulus
    double C = 1.0;             ///< log-modulus
    double r0 = 0.25;           ///< log-modulus
    double strength = 1.0;      ///< rotation
    double mollify = 0.0;
};

struct ModulusConfig {
    std::string family = "inverse-log";
    double C = 1.0;
    double theta = 0.0;
    double alpha = 2.0;
    double r0 = 0.5;
    double delta = 0.1;
    double p = 1.0;
};

struct GridConfig {
    int d = 1;
    double L = 4.0;
    int n = 128;
    bool periodic = false;
};

struct TimeConfig {
    double s = 0.0;
    double T = 1.0;
    double dt = 1.0 / 256;
    double master_dt = 0.0;
};

struct McConfig {
    int M = 1000;
    double p = 2.0;
    std::vector<double> separations;  ///< 2^{-3} .. 2^{-10} by default
    std::vector<double> n_list{2, 4, 8, 16, 32};
    int lambda_k_max = 10;
    std::vector<Vec> points;          ///< origin by default
    std::string quantity = "X";       ///< X or gradX
    std::string model = "power";      ///< power or log-power
    bool bootstrap = false;
    std::string record = "summary";   ///< summary or paths
};

struct PdeConfig {
    std::string source = "sine";  ///< one, sine, holder-sine
    double tol = 1e-8;
    int max_iter = 200;
};

struct TransportConfig {
    std::string datum = "sine";   ///< sine, cosine, gaussian, step
    double test_radius = 1.0;
    std::vector<double> test_center;  ///< origin by default
    int refinements = 3;
    double alpha = 0.5;               ///< nonuniqueness demo
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::FlowSim;
    std::uint64_t seed = 0;
    std::string output;  ///< empty: $STFLOW_OUTPUT_DIR, else ./stflow-out
    DriftConfig drift;
    ModulusConfig modulus;
    GridConfig grid;
    TimeConfig time;
    McConfig mc;
    PdeConfig pde;
    TransportConfig transport;

    /// Every resolved field as "section.key" -> canonical text.
    std::map<std::string, std::string> canonical() const;
    /// FNV-1a 64 of the canonical form, excluding experiment.output.
    std::uint64_t hash() const;
    std::string hash_hex() const;
    std::string output_dir() const;
};

/**
 * Parses an INI document ([experiment], [drift], [modulus], [grid], [time], [mc], [pde],
 * [transport]). Overrides are "section.key=value" and win over the document. Unknown keys
 * and invalid values raise ValidationError naming the field; malformed text raises a Parse
 * error.
 */
ExperimentConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {});
ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

DriftSpec build_drift(const ExperimentConfig& cfg);
Modulus build_modulus(const ModulusConfig& cfg);

/// Shortest round-trip decimal form.
std::string format_number(double v);

}  // namespace stflow
