#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <string>

#include "roughsing/runner.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir = "runs";
    std::string seed_override;
    int threads = 0;
    bool check = false;
    bool json = false;
};

void attach_common(CLI::App* sub, CommonOpts& opts, bool needs_config = true) {
    auto* copt = sub->add_option("--config", opts.config_path, "experiment config JSON");
    if (needs_config) copt->required();
    sub->add_option("--out", opts.out_dir, "output root directory");
    sub->add_option("--seed", opts.seed_override, "override the config seed");
    sub->add_option("--threads", opts.threads, "worker pool width");
    sub->add_flag("--check", opts.check, "evaluate acceptance assertions (exit 4 on violation)");
    sub->add_flag("--json", opts.json, "machine-readable stdout");
}

int dispatch(const std::string& experiment, CommonOpts& opts) {
    roughsing::RunConfig cfg = roughsing::load_config(opts.config_path);
    if (cfg.experiment != experiment)
        throw roughsing::config_error("config is for experiment '" + cfg.experiment +
                                      "', subcommand is '" + experiment + "'");
    if (!opts.seed_override.empty()) {
        cfg.seed = std::strtoull(opts.seed_override.c_str(), nullptr, 10);
        cfg.effective["seed"] = cfg.seed;
        cfg.hash = roughsing::config_hash(cfg.effective);
    }
    if (opts.threads > 0) {
        cfg.threads = opts.threads;
        cfg.effective["threads"] = cfg.threads;
        cfg.hash = roughsing::config_hash(cfg.effective);
    } else if (const char* env = std::getenv("ROUGHSING_THREADS")) {
        cfg.threads = std::max(1, std::atoi(env));
    }
    const roughsing::RunOutcome outcome =
        roughsing::run_experiment(cfg, opts.out_dir, opts.check, opts.json);
    std::printf("%s\n", outcome.payload.c_str());
    if (!opts.json)
        std::fprintf(stderr, "record written to %s\n", outcome.paths.dir.c_str());
    return outcome.exit_code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for rough-kernel commutator estimates"};
    app.require_subcommand(1);

    static const char* experiments[] = {"weights", "apply",       "opnorm", "decay",
                                        "growth",  "scaling",     "multiplier",
                                        "kernelcheck", "dini",    "interp"};
    std::vector<std::pair<CLI::App*, std::shared_ptr<CommonOpts>>> subs;
    for (const char* name : experiments) {
        auto opts = std::make_shared<CommonOpts>();
        CLI::App* sub = app.add_subcommand(name, std::string("run the ") + name + " experiment");
        attach_common(sub, *opts);
        subs.emplace_back(sub, opts);
    }

    auto self_opts = std::make_shared<CommonOpts>();
    std::string inject_fault;
    CLI::App* self = app.add_subcommand("selftest", "fast invariant suite");
    self->add_flag("--json", self_opts->json, "machine-readable stdout");
    self->add_option("--inject-fault", inject_fault,
                     "deliberately break the named check (detector test)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (self->parsed()) return roughsing::run_selftest(self_opts->json, inject_fault);
        for (std::size_t s = 0; s < subs.size(); ++s)
            if (subs[s].first->parsed()) return dispatch(experiments[s], *subs[s].second);
        std::fprintf(stderr, "no subcommand given\n");
        return 2;
    } catch (const roughsing::config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const roughsing::numeric_error& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
