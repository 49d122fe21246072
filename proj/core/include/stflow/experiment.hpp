#pragma once

#include "stflow/config.hpp"

#include <string>
#include <vector>

namespace stflow {

struct RunResult {
    std::string directory;
    std::string hash;
    /// Data files, byte-identical for a fixed config at any thread count.
    std::vector<std::string> files;
    std::string manifest;  ///< carries wall time and version; not reproducible byte-for-byte
};

/**
 * Runs one experiment and writes <kind>*.csv, <kind>-summary.json and manifest.json under
 * cfg.output_dir(). Numeric failures that still leave a report (lambda-sweep without a
 * lambda0, modulus-verify on a non-Dini modulus) write it before rethrowing.
 */
RunResult run_experiment(const ExperimentConfig& cfg);

/// Version string baked in at build time.
const char* version() noexcept;

}  // namespace stflow
