#include "roughsing/io.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace roughsing {

namespace fs = std::filesystem;

json parse_json_checked(const std::string& text) {
    std::vector<std::set<std::string>> stack;
    json::parser_callback_t cb = [&stack](int, json::parse_event_t event, json& parsed) {
        if (event == json::parse_event_t::object_start) {
            stack.emplace_back();
        } else if (event == json::parse_event_t::object_end) {
            stack.pop_back();
        } else if (event == json::parse_event_t::key) {
            const auto key = parsed.get<std::string>();
            if (!stack.back().insert(key).second)
                throw config_error("duplicate key '" + key + "'");
        }
        return true;
    };
    try {
        return json::parse(text, cb);
    } catch (const config_error&) {
        throw;
    } catch (const json::exception& e) {
        throw config_error(std::string("invalid JSON: ") + e.what());
    }
}

namespace {

const std::set<std::string> kExperiments = {"weights", "apply",      "opnorm", "decay",
                                            "growth",  "scaling",    "multiplier",
                                            "kernelcheck", "dini",   "interp"};

void reject_unknown(const json& obj, const std::set<std::string>& known,
                    const std::string& path) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!known.count(it.key()))
            throw config_error("unknown key '" + path + it.key() + "'");
}

double num_at(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.contains(key)) throw config_error("missing field '" + path + key + "'");
    if (!obj[key].is_number()) throw config_error("field '" + path + key + "' must be a number");
    return obj[key].get<double>();
}

void validate_omega(const json& omega) {
    if (!omega.is_object()) throw config_error("'Omega' must be an object");
    const std::string type = omega.value("type", "");
    if (type == "harmonic") {
        reject_unknown(omega, {"type", "m", "amp", "nodes"}, "Omega.");
        num_at(omega, "m", "Omega.");
    } else if (type == "values") {
        reject_unknown(omega, {"type", "values"}, "Omega.");
        if (!omega.contains("values") || !omega["values"].is_array())
            throw config_error("missing field 'Omega.values'");
    } else if (type == "signs") {
        reject_unknown(omega, {"type", "plus", "minus"}, "Omega.");
        num_at(omega, "plus", "Omega.");
        num_at(omega, "minus", "Omega.");
    } else if (type == "csv") {
        reject_unknown(omega, {"type", "path"}, "Omega.");
        if (!omega.contains("path")) throw config_error("missing field 'Omega.path'");
    } else {
        throw config_error("'Omega.type' must be harmonic, values, signs or csv");
    }
}

void validate_b(const json& b) {
    if (!b.is_object()) throw config_error("'b' must be an object");
    const std::string type = b.value("type", "");
    if (type == "linear") {
        reject_unknown(b, {"type", "direction"}, "b.");
        if (!b.contains("direction") || !b["direction"].is_array())
            throw config_error("missing field 'b.direction'");
    } else if (type == "sampled") {
        reject_unknown(b, {"type", "path", "grad_bound"}, "b.");
        if (!b.contains("path")) throw config_error("missing field 'b.path'");
        num_at(b, "grad_bound", "b.");
    } else {
        throw config_error("'b.type' must be linear or sampled");
    }
}

void validate_weight(const json& w) {
    if (!w.is_object()) throw config_error("'weight' must be an object");
    const std::string type = w.value("type", "");
    if (type == "power") {
        reject_unknown(w, {"type", "alpha"}, "weight.");
        num_at(w, "alpha", "weight.");
    } else if (type == "sampled") {
        reject_unknown(w, {"type", "path"}, "weight.");
        if (!w.contains("path")) throw config_error("missing field 'weight.path'");
    } else {
        throw config_error("'weight.type' must be power or sampled");
    }
}

json default_tolerances() {
    return json{{"scaling_slope_max", 2.3},
                {"scaling_ratio_spread_max", 10.0},
                {"decay_min_rate", 0.0},
                {"growth_ratio_spread_max", 10.0},
                {"kernel_size_max", 16.0},
                {"kernel_smooth_max", 16.0},
                {"multiplier_high_slope_min", 1.9},
                {"multiplier_low_slope_min", 0.0},
                {"d2_margin", 1.25},
                {"geo_c_max", 10.0},
                {"interp_slack", 1.0}};
}

const std::set<std::string> kParamKeys = {
    "p", "q", "trials", "side", "jmax", "j", "schedule", "high_schedule", "op", "eps",
    "degree", "k", "i_lo", "i_hi", "alphas", "gamma", "r_values", "n_list", "samples",
    "rmin", "rmax", "family_exp_min", "family_exp_max", "max_iters", "tol", "strict",
    "input", "probe_seed", "xi_lo", "xi_hi", "krange", "dump_tables", "k_low", "k_high"};

} // namespace

RunConfig config_from_json(const json& raw) {
    if (!raw.is_object()) throw config_error("config must be a JSON object");
    reject_unknown(raw,
                   {"experiment", "grid", "Omega", "b", "weight", "params", "seed", "c_n",
                    "threads", "tolerances"},
                   "");

    RunConfig cfg;
    if (!raw.contains("experiment") || !raw["experiment"].is_string())
        throw config_error("missing field 'experiment'");
    cfg.experiment = raw["experiment"].get<std::string>();
    if (!kExperiments.count(cfg.experiment))
        throw config_error("unknown experiment '" + cfg.experiment + "'");

    if (!raw.contains("grid")) throw config_error("missing field 'grid'");
    const json& grid = raw["grid"];
    reject_unknown(grid, {"n", "M", "L"}, "grid.");
    cfg.n = static_cast<int>(num_at(grid, "n", "grid."));
    cfg.points = static_cast<int>(num_at(grid, "M", "grid."));
    cfg.halfwidth = num_at(grid, "L", "grid.");

    const bool needs_omega = cfg.experiment != "weights" && cfg.experiment != "dini";
    if (raw.contains("Omega")) {
        validate_omega(raw["Omega"]);
        cfg.omega = raw["Omega"];
    } else if (needs_omega) {
        throw config_error("missing field 'Omega'");
    }

    const bool needs_b = cfg.experiment != "weights" && cfg.experiment != "dini" &&
                         cfg.experiment != "multiplier";
    if (raw.contains("b")) {
        validate_b(raw["b"]);
        cfg.b = raw["b"];
    } else if (needs_b) {
        throw config_error("missing field 'b'");
    }

    if (raw.contains("weight")) {
        validate_weight(raw["weight"]);
        cfg.weight = raw["weight"];
    } else if (cfg.experiment == "growth" || cfg.experiment == "interp" ||
               cfg.experiment == "weights") {
        throw config_error("missing field 'weight'");
    }

    cfg.params = raw.value("params", json::object());
    if (!cfg.params.is_object()) throw config_error("'params' must be an object");
    reject_unknown(cfg.params, kParamKeys, "params.");

    cfg.tolerances = default_tolerances();
    if (raw.contains("tolerances")) {
        const json& tols = raw["tolerances"];
        if (!tols.is_object()) throw config_error("'tolerances' must be an object");
        std::set<std::string> known;
        for (auto it = cfg.tolerances.begin(); it != cfg.tolerances.end(); ++it)
            known.insert(it.key());
        reject_unknown(tols, known, "tolerances.");
        for (auto it = tols.begin(); it != tols.end(); ++it) cfg.tolerances[it.key()] = it.value();
    }

    if (raw.contains("seed")) {
        if (!raw["seed"].is_number_integer() ||
            (raw["seed"].is_number_integer() && !raw["seed"].is_number_unsigned() &&
             raw["seed"].get<std::int64_t>() < 0))
            throw config_error("'seed' must be a nonnegative integer");
        cfg.seed = raw["seed"].get<std::uint64_t>();
    }
    if (raw.contains("c_n")) {
        cfg.c_n = raw["c_n"].get<double>();
        if (!(cfg.c_n > 0.0)) throw config_error("'c_n' must be positive");
    }
    if (raw.contains("threads")) {
        cfg.threads = raw["threads"].get<int>();
        if (cfg.threads < 1) throw config_error("'threads' must be >= 1");
    }

    cfg.effective = json{{"experiment", cfg.experiment},
                         {"grid", {{"n", cfg.n}, {"M", cfg.points}, {"L", cfg.halfwidth}}},
                         {"params", cfg.params},
                         {"tolerances", cfg.tolerances},
                         {"seed", cfg.seed},
                         {"c_n", cfg.c_n},
                         {"threads", cfg.threads}};
    if (!cfg.omega.is_null()) cfg.effective["Omega"] = cfg.omega;
    if (!cfg.b.is_null()) cfg.effective["b"] = cfg.b;
    if (!cfg.weight.is_null()) cfg.effective["weight"] = cfg.weight;
    cfg.hash = config_hash(cfg.effective);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw config_error("cannot open config file " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return config_from_json(parse_json_checked(buf.str()));
}

std::string config_hash(const json& canonical) {
    const std::string dump = canonical.dump();
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

namespace {

// Exclusive per-directory lock, released on destruction.
class DirLock {
public:
    explicit DirLock(const fs::path& dir) : path_(dir / ".lock") {
        fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd_ < 0) throw numeric_error("directory is locked by another writer: " + dir.string());
    }
    ~DirLock() {
        if (fd_ >= 0) {
            ::close(fd_);
            std::error_code ec;
            fs::remove(path_, ec);
        }
    }
    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

private:
    fs::path path_;
    int fd_ = -1;
};

void atomic_write(const fs::path& target, const std::string& content) {
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw numeric_error("cannot open " + tmp.string());
        os << content;
        if (!os) throw numeric_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, target);
}

std::string render_csv(const RunRecord& record) {
    std::ostringstream os;
    for (std::size_t c = 0; c < record.columns.size(); ++c)
        os << (c ? "," : "") << record.columns[c];
    os << "\n";
    auto rows = record.rows;
    std::stable_sort(rows.begin(), rows.end());
    char buf[40];
    for (const auto& row : rows) {
        if (row.size() != record.columns.size())
            throw config_error("record row width does not match columns");
        for (std::size_t c = 0; c < row.size(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", row[c]);
            os << (c ? "," : "") << buf;
        }
        os << "\n";
    }
    return os.str();
}

} // namespace

RecordPaths write_record(const RunRecord& record, const std::string& dir) {
    fs::path root(dir);
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec) throw numeric_error("cannot create directory " + dir + ": " + ec.message());
    DirLock lock(root);

    RecordPaths paths;
    paths.dir = root.string();
    paths.csv = (root / "results.csv").string();
    paths.manifest = (root / "manifest.json").string();
    atomic_write(root / "results.csv", render_csv(record));
    atomic_write(root / "manifest.json", record.manifest.dump(2) + "\n");
    if (!record.plot_kind.empty()) {
        paths.plot = (root / "plot.gp").string();
        atomic_write(root / "plot.gp", emit_plot_script(record, record.plot_kind));
    }
    return paths;
}

namespace {

int column_index(const RunRecord& record, const std::string& name, const std::string& kind) {
    const auto it = std::find(record.columns.begin(), record.columns.end(), name);
    if (it == record.columns.end())
        throw config_error("plot kind '" + kind + "' requires column '" + name + "'");
    return static_cast<int>(it - record.columns.begin()) + 1;  // gnuplot is 1-based
}

} // namespace

std::string emit_plot_script(const RunRecord& record, const std::string& kind) {
    std::ostringstream os;
    os << "# gnuplot script; expects results.csv next to it\n";
    os << "set datafile separator ','\n";
    if (kind == "decay") {
        const int x = column_index(record, "n_prev", kind);
        const int y = column_index(record, "norm", kind);
        os << "set logscale y\n"
           << "set xlabel 'N(j-1)'\nset ylabel 'operator norm'\n"
           << "plot 'results.csv' skip 1 using " << x << ":" << y
           << " with linespoints title 'band norm'\n";
    } else if (kind == "scaling") {
        const int x = column_index(record, "ap", kind);
        const int y = column_index(record, "norm", kind);
        double c_ref = 1.0;
        if (!record.rows.empty()) {
            const auto& row = record.rows.front();
            const double ap0 = row[static_cast<std::size_t>(x - 1)];
            const double n0 = row[static_cast<std::size_t>(y - 1)];
            if (ap0 > 0.0 && n0 > 0.0) c_ref = n0 / (ap0 * ap0);
        }
        os << "set logscale xy\n"
           << "set xlabel '[w]_{A_2}'\nset ylabel 'commutator norm'\n"
           << "plot 'results.csv' skip 1 using " << x << ":" << y
           << " with points title 'measured', " << c_ref << "*x**2 title 'slope-2 reference'\n";
    } else if (kind == "multiplier") {
        const int x = column_index(record, "i", kind);
        const int y = column_index(record, "mmax", kind);
        os << "set logscale xy\n"
           << "set xlabel '2^{-i}'\nset ylabel 'max |m|'\n"
           << "plot 'results.csv' skip 1 using (2**(-column(" << x << "))):" << y
           << " with linespoints title 'annulus max'\n";
    } else {
        throw config_error("unknown plot kind '" + kind + "'");
    }
    return os.str();
}

} // namespace roughsing
