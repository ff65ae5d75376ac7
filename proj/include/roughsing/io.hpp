#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "roughsing/errors.hpp"

namespace roughsing {

using json = nlohmann::json;

/// Parses JSON text, rejecting duplicate object keys.
json parse_json_checked(const std::string& text);

/// Validated experiment configuration. `effective` is the canonical form
/// with defaults filled; `hash` is its content address.
struct RunConfig {
    std::string experiment;
    int n = 2;
    int points = 64;
    double halfwidth = 8.0;
    json omega;
    json b;
    json weight;      // null when absent
    json params;      // experiment-specific knobs
    json tolerances;  // check-mode thresholds, defaults filled
    std::uint64_t seed = 0;
    double c_n = 1.0;
    int threads = 1;
    json effective;
    std::string hash;
};

RunConfig config_from_json(const json& raw);
RunConfig load_config(const std::string& path);

/// FNV-1a over the canonical (sorted-key, whitespace-free) dump.
std::string config_hash(const json& canonical);

/// One experiment's persisted output: manifest JSON plus numeric CSV rows.
struct RunRecord {
    json manifest;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::string plot_kind;  // "", "decay", "scaling" or "multiplier"
};

struct RecordPaths {
    std::string dir;
    std::string csv;
    std::string manifest;
    std::string plot;  // empty when no plot script was emitted
};

/// Writes results.csv, manifest.json and plot.gp under dir, atomically
/// (temp + rename) behind a per-directory lock file. Rows are sorted before
/// writing; identical reruns produce byte-identical files.
RecordPaths write_record(const RunRecord& record, const std::string& dir);

/// Standalone gnuplot text referencing results.csv by relative path.
/// kind: decay (semilog norm vs N(j-1)), scaling (log-log norm vs [w]_{A_2}
/// with a slope-2 reference), multiplier (log-log max|m| vs 2^{-i}).
std::string emit_plot_script(const RunRecord& record, const std::string& kind);

} // namespace roughsing
