#include "roughsing/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "roughsing/parallel.hpp"

namespace roughsing {

namespace {

constexpr const char* kVersion = "roughsing 0.1.0";

std::string now_utc() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return std::string(buf);
}

double param_num(const RunConfig& cfg, const std::string& key, double fallback) {
    return cfg.params.contains(key) ? cfg.params[key].get<double>() : fallback;
}

std::string param_str(const RunConfig& cfg, const std::string& key,
                      const std::string& fallback) {
    return cfg.params.contains(key) ? cfg.params[key].get<std::string>() : fallback;
}

BandSide side_of(const std::string& s) {
    if (s == "low") return BandSide::low;
    if (s == "high") return BandSide::high;
    throw config_error("side must be 'low' or 'high'");
}

json manifest_for(const RunConfig& cfg) {
    return json{{"config", cfg.effective},
                {"config_hash", cfg.hash},
                {"seed", cfg.seed},
                {"version", kVersion},
                {"timestamp", now_utc()}};
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return std::string(buf);
}

} // namespace

GridSpec grid_of(const RunConfig& cfg) { return make_grid(cfg.n, cfg.points, cfg.halfwidth); }

SphereSymbol omega_of(const RunConfig& cfg) {
    const json& om = cfg.omega;
    if (om.is_null()) throw config_error("experiment needs an Omega section");
    const std::string type = om["type"].get<std::string>();
    if (type == "harmonic") {
        if (cfg.n != 2) throw config_error("harmonic Omega requires n = 2");
        return from_harmonic(2, om["m"].get<int>(), om.value("amp", 1.0),
                             om.value("nodes", 256));
    }
    if (type == "values") return make_symbol_2d(om["values"].get<std::vector<double>>());
    if (type == "signs") {
        if (cfg.n != 1) throw config_error("signs Omega requires n = 1");
        return make_symbol_1d(om["plus"].get<double>(), om["minus"].get<double>());
    }
    return read_symbol_csv(om["path"].get<std::string>());
}

LipschitzSymbol b_of(const RunConfig& cfg, const GridSpec& spec) {
    const json& b = cfg.b;
    if (b.is_null()) throw config_error("experiment needs a b section");
    if (b["type"] == "linear") {
        const auto dir = b["direction"].get<std::vector<double>>();
        if (dir.size() != static_cast<std::size_t>(spec.dim))
            throw config_error("b.direction length must match the dimension");
        return linear_symbol(spec, {dir[0], dir.size() > 1 ? dir[1] : 0.0});
    }
    GridFunction field = read_binary(b["path"].get<std::string>());
    if (!(field.spec == spec)) throw config_error("sampled b grid mismatch");
    return lipschitz_symbol(std::move(field), b["grad_bound"].get<double>());
}

Weight weight_of(const RunConfig& cfg, const GridSpec& spec) {
    const json& w = cfg.weight;
    if (w.is_null()) throw config_error("experiment needs a weight section");
    if (w["type"] == "power") return power_weight(w["alpha"].get<double>(), spec.dim);
    GridFunction field = read_binary(w["path"].get<std::string>());
    if (!(field.spec == spec)) throw config_error("sampled weight grid mismatch");
    std::vector<double> samples(field.size());
    for (std::size_t i = 0; i < samples.size(); ++i) samples[i] = field.values[i].real();
    return sampled_weight(spec, std::move(samples));
}

namespace {

CubeFamily family_of(const RunConfig& cfg, const GridSpec& spec) {
    if (cfg.params.contains("family_exp_min"))
        return make_cube_family(spec, cfg.params["family_exp_min"].get<int>(),
                                cfg.params["family_exp_max"].get<int>());
    return default_cube_family(spec);
}

OpnormOptions opts_of(const RunConfig& cfg) {
    OpnormOptions opts;
    opts.max_iters = static_cast<int>(param_num(cfg, "max_iters", opts.max_iters));
    opts.tol = param_num(cfg, "tol", opts.tol);
    return opts;
}

std::pair<int, int> krange_of(const RunConfig& cfg, const GridSpec& spec) {
    if (cfg.params.contains("krange")) {
        const auto kr = cfg.params["krange"].get<std::vector<int>>();
        if (kr.size() != 2 || kr[0] > kr[1])
            throw config_error("params.krange must be [kmin, kmax]");
        return {kr[0], kr[1]};
    }
    return shell_range(spec);
}

std::vector<cplx> operator_symbol(const RunConfig& cfg, const GridSpec& spec,
                                  const SphereSymbol& omega) {
    const std::string op = param_str(cfg, "op", "C");
    if (op == "C") {
        const auto [kmin, kmax] = krange_of(cfg, spec);
        return commutator_sum_symbol(spec, omega, kmin, kmax);
    }
    if (op == "Teps")
        return truncated_symbol(spec, omega, param_num(cfg, "eps", spec.spacing),
                                static_cast<int>(param_num(cfg, "degree", spec.dim)));
    const JumpSchedule schedule = schedule_by_name(param_str(cfg, "schedule", "pow2"));
    const int j = static_cast<int>(param_num(cfg, "j", 1));
    if (op == "T1j") return tij_symbol(spec, omega, j, BandSide::low, schedule);
    if (op == "T2j") return tij_symbol(spec, omega, j, BandSide::high, schedule);
    throw config_error("params.op must be C, Teps, T1j or T2j");
}

RunOutcome finish(const RunConfig& cfg, const std::string& out_root, RunRecord record,
                  const json& results, bool check_failed, bool json_out,
                  const std::string& text_summary) {
    record.manifest["results"] = results;
    RunOutcome out;
    out.paths = write_record(record, out_root + "/" + cfg.hash);
    out.exit_code = check_failed ? 4 : 0;
    out.payload = json_out ? results.dump() : text_summary;
    return out;
}

RunOutcome run_weights(const RunConfig& cfg, const std::string& out_root, bool json_out) {
    const GridSpec spec = grid_of(cfg);
    const double p = param_num(cfg, "p", 2.0);
    const CubeFamily family = family_of(cfg, spec);
    const ApReport rep = weight_report(weight_of(cfg, spec), p, family, spec);

    RunRecord record;
    record.manifest = manifest_for(cfg);
    record.columns = {"p", "ap", "ainf_w", "ainf_sigma", "round", "curly"};
    record.rows = {{rep.p, rep.ap, rep.ainf_w, rep.ainf_sigma, rep.round, rep.curly}};
    const json results = parse_json_checked(report_json(rep));
    RunOutcome out = finish(cfg, out_root, std::move(record), results, false, json_out,
                            report_json(rep));
    out.payload = report_json(rep);  // machine-readable by contract
    return out;
}

RunOutcome run_apply(const RunConfig& cfg, const std::string& out_root, bool json_out) {
    const GridSpec spec = grid_of(cfg);
    const SphereSymbol omega = omega_of(cfg);
    GridFunction f = cfg.params.contains("input")
                         ? read_binary(cfg.params["input"].get<std::string>())
                         : random_probe(spec, cfg.seed);
    if (!(f.spec == spec)) throw config_error("input grid mismatch");

    const std::string op = param_str(cfg, "op", "C");
    GridFunction g = make_zero(spec);
    json results;
    if (op == "C") {
        const auto [kmin, kmax] = krange_of(cfg, spec);
        CommutatorTail tail;
        g = apply_C(b_of(cfg, spec), omega, f, kmin, kmax, false, &tail);
        json bands = json::array();
        for (auto [k, n] : tail.band_l2) bands.push_back({{"k", k}, {"l2", n}});
        results["band_l2"] = bands;
    } else if (op == "Teps") {
        g = apply_T_eps(omega, f, param_num(cfg, "eps", spec.spacing),
                        static_cast<int>(param_num(cfg, "degree", spec.dim)));
    } else {
        const JumpSchedule schedule = schedule_by_name(param_str(cfg, "schedule", "pow2"));
        const int j = static_cast<int>(param_num(cfg, "j", 1));
        const LipschitzSymbol b = b_of(cfg, spec);
        g = op == "T1j" ? apply_comm_T1jN(b, omega, f, j, schedule)
                        : apply_comm_T2jN(b, omega, f, j, schedule);
    }
    results["output_l2"] = lp_norm(g, 2.0);

    RunRecord record;
    record.manifest = manifest_for(cfg);
    record.columns = {"output_l2"};
    record.rows = {{results["output_l2"].get<double>()}};
    RunOutcome out =
        finish(cfg, out_root, std::move(record), results, false, json_out,
               "output L2 = " + fmt(results["output_l2"].get<double>()));
    write_binary(g, out.paths.dir + "/output.bin");
    write_csv(g, out.paths.dir + "/output.csv");
    return out;
}

RunOutcome run_opnorm(const RunConfig& cfg, const std::string& out_root, bool check_mode,
                      bool json_out) {
    const GridSpec spec = grid_of(cfg);
    const SphereSymbol omega = omega_of(cfg);
    const double p = param_num(cfg, "p", 2.0);
    const int trials = static_cast<int>(param_num(cfg, "trials", 2));
    const std::string op = param_str(cfg, "op", "C");

    // commutator handles get the wraparound guard, like the experiments: a
    // linear b is not Lipschitz across the torus seam
    LinearOp handle = op == "Teps"
                          ? multiplier_op(spec, operator_symbol(cfg, spec, omega))
                          : guarded_op(commutator_op(spec, operator_symbol(cfg, spec, omega),
                                                     b_of(cfg, spec)));
    Weight w;
    const bool weighted = !cfg.weight.is_null();
    if (weighted) w = weight_of(cfg, spec);
    const NormEstimate est =
        opnorm(handle, p, weighted ? &w : nullptr, trials, cfg.seed, opts_of(cfg));

    if (check_mode && !est.converged && cfg.params.value("strict", false))
        throw numeric_error("opnorm did not converge (residual " + fmt(est.residual) + ")");

    const json results = {{"value", est.value},     {"p", est.p},
                          {"weight", est.weight_desc}, {"method", est.method},
                          {"residual", est.residual}, {"converged", est.converged}};
    RunRecord record;
    record.manifest = manifest_for(cfg);
    record.columns = {"p", "value", "residual", "converged"};
    record.rows = {{est.p, est.value, est.residual, est.converged ? 1.0 : 0.0}};
    return finish(cfg, out_root, std::move(record), results, false, json_out,
                  "opnorm estimate " + fmt(est.value) + " (" + est.method + ")");
}

RunOutcome run_decay(const RunConfig& cfg, const std::string& out_root, bool check_mode,
                     bool json_out) {
    const GridSpec spec = grid_of(cfg);
    const SphereSymbol omega = omega_of(cfg);
    const LipschitzSymbol b = b_of(cfg, spec);
    const BandSide side = side_of(param_str(cfg, "side", "low"));
    const int jmax = static_cast<int>(param_num(cfg, "jmax", 4));
    const double p = param_num(cfg, "p", 2.0);
    const int trials = static_cast<int>(param_num(cfg, "trials", 2));
    const JumpSchedule schedule = schedule_by_name(param_str(cfg, "schedule", "pow2"));

    Weight w;
    const bool weighted = !cfg.weight.is_null();
    if (weighted) w = weight_of(cfg, spec);

    const DecayResult res = decay_experiment(b, omega, side, jmax, p,
                                             weighted ? &w : nullptr, trials, cfg.seed,
                                             schedule, opts_of(cfg));

    RunRecord record;
    record.manifest = manifest_for(cfg);
    record.columns = {"j", "n_prev", "norm", "residual", "converged"};
    for (const DecayRow& row : res.rows)
        record.rows.push_back({static_cast<double>(row.j), static_cast<double>(row.n_prev),
                               row.value, row.residual, row.converged ? 1.0 : 0.0});
    record.plot_kind = "decay";

    bool decreasing = true;
    for (std::size_t i = 1; i < res.rows.size(); ++i)
        decreasing = decreasing && res.rows[i].value < res.rows[i - 1].value;
    const bool check_failed =
        check_mode && !(decreasing && res.rate > cfg.tolerances["decay_min_rate"].get<double>());

    const json results = {{"rate", res.rate},
                          {"slope", res.fit.slope},
                          {"fit_residual", res.fit.residual},
                          {"fit_count", res.fit.count},
                          {"strictly_decreasing", decreasing}};
    return finish(cfg, out_root, std::move(record), results, check_failed, json_out,
                  "decay rate " + fmt(res.rate) + (decreasing ? " (decreasing)" : " (NOT decreasing)"));
}

RunOutcome run_growth(const RunConfig& cfg, const std::string& out_root, bool check_mode,
                      bool json_out) {
    const GridSpec spec = grid_of(cfg);
    const SphereSymbol omega = omega_of(cfg);
    const LipschitzSymbol b = b_of(cfg, spec);
    const BandSide side = side_of(param_str(cfg, "side", "low"));
    const int jmax = static_cast<int>(param_num(cfg, "jmax", 4));
    const double p = param_num(cfg, "p", 2.0);
    const int trials = static_cast<int>(param_num(cfg, "trials", 2));
    const JumpSchedule schedule = schedule_by_name(param_str(cfg, "schedule", "pow2"));
    const Weight w = weight_of(cfg, spec);
    const ApReport rep = weight_report(w, p, family_of(cfg, spec), spec);

    const GrowthResult res = growth_experiment(b, omega, side, jmax, p, w, rep, trials,
                                               cfg.seed, schedule, opts_of(cfg));

    RunRecord record;
    record.manifest = manifest_for(cfg);
    record.columns = {"j", "nj", "norm", "ratio"};
    for (const GrowthRow& row : res.rows)
        record.rows.push_back({static_cast<double>(row.j), static_cast<double>(row.nj),
                               row.value, row.ratio});

    // the claim is an upper bound: later bands must not outgrow the linear
    // (1+N(j)) budget relative to the first band; bands falling below grid
    // resolution only shrink the ratio and are fine
    const double anchor = res.rows.empty() ? 0.0 : res.rows.front().ratio;
    const double rel_growth = anchor > 0.0 ? res.ratio_max / anchor
                                           : std::numeric_limits<double>::infinity();
    const bool check_failed =
        check_mode && !(rel_growth <= cfg.tolerances["growth_ratio_spread_max"].get<double>());
    const json results = {{"ratio_max", res.ratio_max},
                          {"ratio_min", res.ratio_min},
                          {"ratio_first", anchor},
                          {"relative_growth", rel_growth}};
    return finish(cfg, out_root, std::move(record), results, check_failed, json_out,
                  "growth: max ratio " + fmt(res.ratio_max) + " = " + fmt(rel_growth) +
                      " x first band");
}

RunOutcome run_scaling(const RunConfig& cfg, const std::string& out_root, bool check_mode,
                       bool json_out) {
    const GridSpec spec = grid_of(cfg);
    const SphereSymbol omega = omega_of(cfg);
    const LipschitzSymbol b = b_of(cfg, spec);
    const double p = param_num(cfg, "p", 2.0);
    const double q = param_num(cfg, "q", 2.0);
    const int trials = static_cast<int>(param_num(cfg, "trials", 2));
    std::vector<double> alphas = cfg.params.contains("alphas")
                                     ? cfg.params["alphas"].get<std::vector<double>>()
                                     : std::vector<double>{0.0, 0.3, -0.3, 0.6, -0.6, 0.8, -0.8};

    const ScalingResult res = weight_scaling_experiment(
        b, omega, alphas, p, family_of(cfg, spec), q, trials, cfg.seed, opts_of(cfg));

    RunRecord record;
    record.manifest = manifest_for(cfg);
    record.columns = {"alpha", "ap", "curly", "round", "norm", "predicted"};
    for (const ScalingRow& row : res.rows)
        record.rows.push_back({row.alpha, row.report.ap, row.report.curly, row.report.round,
                               row.value, row.predicted});
    record.plot_kind = "scaling";

    const double slope_max = cfg.tolerances["scaling_slope_max"].get<double>();
    const double spread_max = cfg.tolerances["scaling_ratio_spread_max"].get<double>();
    const bool check_failed =
        check_mode && !(res.fit.slope <= slope_max && res.ratio_spread <= spread_max);
    const json results = {{"slope", res.fit.slope},
                          {"fit_residual", res.fit.residual},
                          {"ratio_spread", res.ratio_spread}};
    return finish(cfg, out_root, std::move(record), results, check_failed, json_out,
                  "scaling slope " + fmt(res.fit.slope) + ", ratio spread " +
                      fmt(res.ratio_spread));
}

RunOutcome run_multiplier(const RunConfig& cfg, const std::string& out_root, bool check_mode,
                          bool json_out) {
    const GridSpec spec = grid_of(cfg);
    const SphereSymbol omega = omega_of(cfg);
    // the two sides live at opposite ends of the resolvable (i,k) wedge:
    // psi scale 2^{k-i} (low) wants k near the top, 2^{k+i} (high) near the
    // bottom
    const int k_high = static_cast<int>(param_num(cfg, "k", param_num(cfg, "k_high", -6)));
    const int k_low = static_cast<int>(param_num(cfg, "k_low", 0));
    const int i_lo = static_cast<int>(param_num(cfg, "i_lo", 2));
    const int i_hi = static_cast<int>(param_num(cfg, "i_hi", 6));
    const int degree = static_cast<int>(param_num(cfg, "degree", spec.dim + 1));
    const int samples = static_cast<int>(param_num(cfg, "samples", 200));

    RunRecord record;
    record.manifest = manifest_for(cfg);
    record.columns = {"side", "i", "k", "mmax", "d2ratio"};

    json results;
    double d2_worst = 0.0;
    for (const BandSide side : {BandSide::high, BandSide::low}) {
        const int k = side == BandSide::high ? k_high : k_low;
        std::vector<double> xs, ys;
        for (int i = i_lo; i <= i_hi; ++i) {
            const double mmax =
                multiplier_annulus_max(omega, i, k, side, spec, degree, samples);
            const double d2 = multiplier_d2_max(omega, i, k, side, spec, degree, 50);
            d2_worst = std::max(d2_worst, d2);
            record.rows.push_back({side == BandSide::low ? 0.0 : 1.0, static_cast<double>(i),
                                   static_cast<double>(k), mmax, d2});
            if (mmax > 0.0) {
                xs.push_back(static_cast<double>(i));
                ys.push_back(std::log2(mmax));
            }
        }
        if (xs.size() < 2)
            throw config_error("multiplier: annuli for the " +
                               std::string(side == BandSide::low ? "low" : "high") +
                               " side are empty on this lattice; adjust k");
        const LineFit fit = fit_line(xs, ys);
        // log2 max|m| against i; decay rate is -slope
        results[side == BandSide::low ? "low_rate" : "high_rate"] = -fit.slope;
        results[side == BandSide::low ? "low_residual" : "high_residual"] = fit.rms_residual;
    }
    record.plot_kind = "multiplier";

    const MollifierProfile& prof = default_profile();
    const double d1 = prof.psi_d1_sup();
    const double d2s = prof.psi_d2_sup() + (spec.dim == 2 ? 4.0 * d1 : 0.0);
    const double c_rig = lq_norm(omega, 1.0) * (1.0 + 2.0 * d1 + 0.5 * d2s);
    const double margin = cfg.tolerances["d2_margin"].get<double>();
    results["d2_worst"] = d2_worst;
    results["d2_bound"] = margin * c_rig;

    const bool check_failed =
        check_mode &&
        !(results["high_rate"].get<double>() >=
              cfg.tolerances["multiplier_high_slope_min"].get<double>() &&
          results["low_rate"].get<double>() >
              cfg.tolerances["multiplier_low_slope_min"].get<double>() &&
          d2_worst <= margin * c_rig);
    RunOutcome out =
        finish(cfg, out_root, std::move(record), results, check_failed, json_out,
               "multiplier decay rates: high " + fmt(results["high_rate"].get<double>()) +
                   ", low " + fmt(results["low_rate"].get<double>()));
    write_profile_csv(prof, out.paths.dir + "/profile.csv");
    if (cfg.params.value("dump_tables", false)) {
        for (const BandSide side : {BandSide::high, BandSide::low}) {
            for (int i = i_lo; i <= i_hi; ++i) {
                const MultiplierTable table = multiplier_table(
                    omega, i, side == BandSide::high ? k_high : k_low, side, spec, degree);
                write_multiplier_csv(table, out.paths.dir + "/m_" +
                                                (side == BandSide::low ? "low" : "high") + "_" +
                                                std::to_string(i) + ".csv");
            }
        }
    }
    return out;
}

RunOutcome run_kernelcheck(const RunConfig& cfg, const std::string& out_root, bool check_mode,
                           bool json_out) {
    const GridSpec spec = grid_of(cfg);
    const SphereSymbol omega = omega_of(cfg);
    const LipschitzSymbol b = b_of(cfg, spec);
    const int jmax = static_cast<int>(param_num(cfg, "jmax", 3));
    const int count = static_cast<int>(param_num(cfg, "samples", 200));
    const double rmin = param_num(cfg, "rmin", 8.0 * spec.spacing);
    const double rmax = param_num(cfg, "rmax", spec.halfwidth / 4.0);
    const JumpSchedule low_schedule = schedule_by_name(param_str(cfg, "schedule", "pow2"));
    const JumpSchedule high_schedule =
        schedule_by_name(param_str(cfg, "high_schedule", "linear"));

    const auto samples = make_kernel_samples(spec, count, cfg.seed, rmin, rmax);

    RunRecord record;
    record.manifest = manifest_for(cfg);
    record.columns = {"side", "j", "size_ratio", "smooth_ratio"};
    double size_worst = 0.0, smooth_worst = 0.0;
    for (const BandSide side : {BandSide::low, BandSide::high}) {
        const JumpSchedule& schedule = side == BandSide::low ? low_schedule : high_schedule;
        for (int j = 1; j <= jmax; ++j) {
            const KernelCheckReport rep =
                kernel_estimate_check(b, omega, j, schedule, side, samples);
            record.rows.push_back({side == BandSide::low ? 0.0 : 1.0, static_cast<double>(j),
                                   rep.size_ratio, rep.smooth_ratio});
            size_worst = std::max(size_worst, rep.size_ratio);
            smooth_worst = std::max(smooth_worst, rep.smooth_ratio);
        }
    }

    const bool check_failed =
        check_mode && !(size_worst <= cfg.tolerances["kernel_size_max"].get<double>() &&
                        smooth_worst <= cfg.tolerances["kernel_smooth_max"].get<double>());
    const json results = {{"size_worst", size_worst}, {"smooth_worst", smooth_worst}};
    return finish(cfg, out_root, std::move(record), results, check_failed, json_out,
                  "kernel ratios: size " + fmt(size_worst) + ", smooth " + fmt(smooth_worst));
}

RunOutcome run_dini(const RunConfig& cfg, const std::string& out_root, bool check_mode,
                    bool json_out) {
    std::vector<long> ns = cfg.params.contains("n_list")
                               ? cfg.params["n_list"].get<std::vector<long>>()
                               : std::vector<long>{0, 1, 2, 4, 8, 16};
    RunRecord record;
    record.manifest = manifest_for(cfg);
    record.columns = {"N", "dini_norm"};
    bool exact = true;
    for (long n : ns) {
        const double v = dini_norm(n);
        exact = exact && std::abs(v - (1.0 + n * std::numbers::ln2)) <= 1e-12 * v;
        record.rows.push_back({static_cast<double>(n), v});
    }
    const bool check_failed = check_mode && !exact;
    const json results = {{"closed_form_exact", exact}};
    return finish(cfg, out_root, std::move(record), results, check_failed, json_out,
                  std::string("dini closed form ") + (exact ? "exact" : "MISMATCH"));
}

RunOutcome run_interp(const RunConfig& cfg, const std::string& out_root, bool check_mode,
                      bool json_out) {
    const GridSpec spec = grid_of(cfg);
    const SphereSymbol omega = omega_of(cfg);
    const LipschitzSymbol b = b_of(cfg, spec);
    const Weight w = weight_of(cfg, spec);
    const int j = static_cast<int>(param_num(cfg, "j", 2));
    const double p = param_num(cfg, "p", 2.0);
    const double gamma = param_num(cfg, "gamma", 0.5);
    const int trials = static_cast<int>(param_num(cfg, "trials", 2));
    const JumpSchedule schedule = schedule_by_name(param_str(cfg, "schedule", "pow2"));
    std::vector<double> rs = cfg.params.contains("r_values")
                                 ? cfg.params["r_values"].get<std::vector<double>>()
                                 : std::vector<double>{1.0, 2.0, 4.0, 8.0};

    const InterpReport rep = interpolation_consistency_experiment(
        b, omega, j, p, w, cfg.c_n, family_of(cfg, spec), trials, cfg.seed, schedule, gamma,
        rs, opts_of(cfg));

    RunRecord record;
    record.manifest = manifest_for(cfg);
    record.columns = {"R", "geo_sum"};
    double geo_c = 0.0;
    for (const auto& g : rep.geo) {
        record.rows.push_back({g[0], g[1]});
        geo_c = std::max(geo_c, g[1] / g[0]);
    }

    const double slack = cfg.tolerances["interp_slack"].get<double>();
    const bool check_failed =
        check_mode && !(rep.measured <= slack * rep.combined &&
                        geo_c <= cfg.tolerances["geo_c_max"].get<double>());
    const json results = {{"eps", rep.eps},       {"k0", rep.k0},
                          {"k1", rep.k1},         {"measured", rep.measured},
                          {"combined", rep.combined}, {"geo_c", geo_c},
                          {"upper_bound_holds", rep.upper_bound_holds}};
    return finish(cfg, out_root, std::move(record), results, check_failed, json_out,
                  "interp: measured " + fmt(rep.measured) + " <= combined " +
                      fmt(rep.combined) + (rep.upper_bound_holds ? " (holds)" : " (VIOLATED)"));
}

} // namespace

RunOutcome run_experiment(const RunConfig& cfg, const std::string& out_root, bool check_mode,
                          bool json_out) {
    set_thread_count(cfg.threads);
    if (cfg.experiment == "weights") return run_weights(cfg, out_root, json_out);
    if (cfg.experiment == "apply") return run_apply(cfg, out_root, json_out);
    if (cfg.experiment == "opnorm") return run_opnorm(cfg, out_root, check_mode, json_out);
    if (cfg.experiment == "decay") return run_decay(cfg, out_root, check_mode, json_out);
    if (cfg.experiment == "growth") return run_growth(cfg, out_root, check_mode, json_out);
    if (cfg.experiment == "scaling") return run_scaling(cfg, out_root, check_mode, json_out);
    if (cfg.experiment == "multiplier")
        return run_multiplier(cfg, out_root, check_mode, json_out);
    if (cfg.experiment == "kernelcheck")
        return run_kernelcheck(cfg, out_root, check_mode, json_out);
    if (cfg.experiment == "dini") return run_dini(cfg, out_root, check_mode, json_out);
    if (cfg.experiment == "interp") return run_interp(cfg, out_root, check_mode, json_out);
    throw config_error("unknown experiment '" + cfg.experiment + "'");
}

int run_selftest(bool json_out, const std::string& inject_fault) {
    struct Check {
        std::string name;
        bool pass;
    };
    std::vector<Check> checks;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);

    {  // transform round trip + Parseval, both dimensions
        bool ok = true;
        for (int dim : {1, 2}) {
            const GridSpec spec = make_grid(dim, dim == 1 ? 256 : 32, 8.0);
            GridFunction f = make_zero(spec);
            for (auto& v : f.values) v = cplx{uni(rng), uni(rng)};
            const GridFunction g = idft(dft(f));
            double err = 0.0, ref = 0.0, sumf = 0.0, sumF = 0.0;
            const GridFunction F = dft(f);
            for (std::size_t i = 0; i < f.size(); ++i) {
                err += std::norm(g.values[i] - f.values[i]);
                ref += std::norm(f.values[i]);
                sumf += std::norm(f.values[i]) * spec.cell_volume();
                sumF += std::norm(F.values[i]);
            }
            ok = ok && std::sqrt(err / ref) <= 1e-12 &&
                 std::abs(sumf - sumF) <= 1e-12 * sumf;
        }
        checks.push_back({"transform_roundtrip_parseval", ok});
    }
    {  // partition identity at random frequencies
        const MollifierProfile& prof = default_profile();
        const double sign = inject_fault == "psi_identity" ? -1.0 : 1.0;
        bool ok = true;
        for (int t = 0; t < 1000; ++t) {
            const double xi = 3.0 * std::abs(uni(rng));
            const double psi = prof.psi_hat(xi);
            const double lhs = psi * psi * psi + sign * prof.phi_hat(2.0 * xi);
            ok = ok && std::abs(lhs - prof.phi_hat(xi)) <= 1e-14;
        }
        checks.push_back({"psi_identity", ok});
    }
    {  // telescoping
        const GridSpec spec = make_grid(1, 256, 8.0);
        GridFunction f = make_zero(spec);
        for (auto& v : f.values) v = cplx{uni(rng), uni(rng)};
        GridFunction acc = make_zero(spec);
        const int jcap = 8;
        for (int j = -jcap; j <= jcap; ++j) acc = acc + delta_j(f, j, 3);
        const GridFunction expect = partial_sum(f, -jcap) - partial_sum(f, jcap + 1);
        checks.push_back({"telescoping",
                          lp_norm(acc - expect, 2.0) <= 1e-12 * std::max(1.0, lp_norm(f, 2.0))});
    }
    {  // cancellation machinery
        const SphereSymbol om = from_harmonic(2, 2, 1.0);
        const SphereSymbol mixed = symbol_from_function(
            64, [](double t) { return 1.0 + std::cos(t) + 0.5 * std::cos(2.0 * t); });
        const SphereSymbol proj = project_cancellation(mixed);
        const SphereSymbol proj2 = project_cancellation(proj);
        double drift = 0.0;
        for (int i = 0; i < proj.nodes(); ++i)
            drift = std::max(drift, std::abs(proj.values[static_cast<std::size_t>(i)] -
                                             proj2.values[static_cast<std::size_t>(i)]));
        checks.push_back({"cancellation", check_cancellation(om, 1e-10) &&
                                              !check_cancellation(mixed, 1e-10) &&
                                              check_cancellation(proj, 1e-10) &&
                                              drift <= 1e-12});
    }
    {  // interpolation arithmetic
        const bool ok = std::abs(sw_combine(4.0, 9.0, 0.5) - 6.0) <= 1e-12 &&
                        std::abs(sw1_combine(4.0, 9.0, 1.0, Sw1Variant::proof) - 6.0) <= 1e-12 &&
                        std::abs(sw1_combine(5.0, 5.0, 0.3, Sw1Variant::statement) - 5.0) <=
                            1e-12 &&
                        std::abs(sw1_combine(5.0, 5.0, 0.3, Sw1Variant::proof) - 5.0) <= 1e-12;
        checks.push_back({"sw_arithmetic", ok});
    }

    bool all = true;
    for (const Check& c : checks) all = all && c.pass;
    if (json_out) {
        json out;
        out["checks"] = json::array();
        for (const Check& c : checks)
            out["checks"].push_back({{"name", c.name}, {"pass", c.pass}});
        out["pass"] = all;
        std::printf("%s\n", out.dump().c_str());
    } else {
        for (const Check& c : checks)
            std::printf("[%s] %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str());
    }
    return all ? 0 : 4;
}

} // namespace roughsing
