#pragma once

#include <string>

#include "roughsing/io.hpp"
#include "roughsing/normlab.hpp"

namespace roughsing {

/// Materializers from validated config sections.
GridSpec grid_of(const RunConfig& cfg);
SphereSymbol omega_of(const RunConfig& cfg);
LipschitzSymbol b_of(const RunConfig& cfg, const GridSpec& spec);
Weight weight_of(const RunConfig& cfg, const GridSpec& spec);

struct RunOutcome {
    int exit_code = 0;       // 0 ok, 4 when a --check assertion failed
    std::string payload;     // printed to stdout
    RecordPaths paths;
};

/// Executes the configured experiment, persists the record under
/// out_root/<config-hash>/ and evaluates check-mode assertions.
RunOutcome run_experiment(const RunConfig& cfg, const std::string& out_root, bool check_mode,
                          bool json_out);

/// Fast invariant suite (transform round trips, partition identities,
/// cancellation, interpolation arithmetic). inject_fault flips a sign inside
/// the named check to prove the detector works ("psi_identity" supported).
int run_selftest(bool json_out, const std::string& inject_fault = "");

} // namespace roughsing
