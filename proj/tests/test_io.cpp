#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "roughsing/io.hpp"

using namespace roughsing;
namespace fs = std::filesystem;

namespace {

json minimal_config() {
    return json{{"experiment", "decay"},
                {"grid", {{"n", 2}, {"M", 32}, {"L", 8.0}}},
                {"Omega", {{"type", "harmonic"}, {"m", 2}, {"amp", 1.0}}},
                {"b", {{"type", "linear"}, {"direction", {1.0, 0.0}}}}};
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

} // namespace

TEST_CASE("minimal config gets defaults") {
    const RunConfig cfg = config_from_json(minimal_config());
    CHECK(cfg.c_n == 1.0);
    CHECK(cfg.seed == 0);
    CHECK(cfg.threads == 1);
    CHECK(cfg.tolerances["scaling_slope_max"].get<double>() == 2.3);
    CHECK(cfg.tolerances["geo_c_max"].get<double>() == 10.0);
    CHECK(!cfg.hash.empty());
    CHECK(cfg.effective.contains("tolerances"));
}

TEST_CASE("missing and unknown fields are named") {
    json j = minimal_config();
    j.erase("Omega");
    CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("Omega"), config_error);

    json j2 = minimal_config();
    j2["grid"]["extra"] = 1;
    CHECK_THROWS_WITH_AS(config_from_json(j2), doctest::Contains("grid.extra"), config_error);

    json j3 = minimal_config();
    j3["surprise"] = true;
    CHECK_THROWS_WITH_AS(config_from_json(j3), doctest::Contains("surprise"), config_error);

    json j4 = minimal_config();
    j4["Omega"] = {{"type", "harmonic"}};
    CHECK_THROWS_WITH_AS(config_from_json(j4), doctest::Contains("Omega.m"), config_error);
}

TEST_CASE("duplicate keys rejected at parse time") {
    const std::string text = R"({"experiment": "decay", "experiment": "growth"})";
    CHECK_THROWS_WITH_AS(parse_json_checked(text), doctest::Contains("duplicate"), config_error);
    const std::string nested = R"({"a": {"x": 1, "x": 2}})";
    CHECK_THROWS_AS(parse_json_checked(nested), config_error);
    CHECK_THROWS_AS(parse_json_checked("{broken"), config_error);
}

TEST_CASE("config hash tracks semantics, not formatting") {
    const RunConfig a = config_from_json(minimal_config());
    const std::string pretty = minimal_config().dump(4);
    const RunConfig b = config_from_json(parse_json_checked(pretty));
    CHECK(a.hash == b.hash);

    json changed = minimal_config();
    changed["seed"] = 5;
    CHECK(config_from_json(changed).hash != a.hash);
}

TEST_CASE("config file round trip") {
    const fs::path dir = fs::temp_directory_path() / "rs_io_cfg";
    fs::create_directories(dir);
    const std::string path = (dir / "cfg.json").string();
    {
        std::ofstream os(path);
        os << minimal_config().dump(2);
    }
    const RunConfig cfg = load_config(path);
    CHECK(cfg.experiment == "decay");
    // writing the effective config back and reloading is the identity
    const std::string path2 = (dir / "cfg2.json").string();
    {
        std::ofstream os(path2);
        os << cfg.effective.dump(2);
    }
    CHECK(load_config(path2).hash == cfg.hash);
    CHECK_THROWS_AS(load_config((dir / "absent.json").string()), config_error);
    fs::remove_all(dir);
}

TEST_CASE("records persist atomically and deterministically") {
    const fs::path dir = fs::temp_directory_path() / "rs_io_rec";
    fs::remove_all(dir);

    RunRecord rec;
    rec.manifest = {{"config_hash", "aa"}, {"seed", 0}};
    rec.columns = {"j", "norm"};
    rec.rows = {{2.0, 0.25}, {1.0, 0.5}};

    const RecordPaths p1 = write_record(rec, (dir / "r").string());
    const std::string csv1 = slurp(p1.csv);
    CHECK(csv1 == "j,norm\n1,0.5\n2,0.25\n");  // sorted by primary key
    CHECK(!fs::exists(dir / "r" / "results.csv.tmp"));
    CHECK(!fs::exists(dir / "r" / ".lock"));

    const RecordPaths p2 = write_record(rec, (dir / "r").string());
    CHECK(slurp(p2.csv) == csv1);
    CHECK(slurp(p2.manifest) == slurp(p1.manifest));

    RunRecord empty;
    empty.manifest = {{"config_hash", "bb"}};
    empty.columns = {"alpha", "norm"};
    const RecordPaths p3 = write_record(empty, (dir / "e").string());
    CHECK(slurp(p3.csv) == "alpha,norm\n");

    CHECK_THROWS_AS(write_record(rec, "/proc/forbidden/x"), std::exception);
    fs::remove_all(dir);
}

TEST_CASE("plot scripts") {
    RunRecord rec;
    rec.columns = {"j", "n_prev", "norm", "residual", "converged"};
    rec.rows = {{1.0, 0.0, 0.5, 0.0, 1.0}};
    const std::string decay = emit_plot_script(rec, "decay");
    CHECK(decay.find("results.csv") != std::string::npos);
    CHECK(decay.find("logscale y") != std::string::npos);

    RunRecord sc;
    sc.columns = {"alpha", "ap", "curly", "round", "norm", "predicted"};
    sc.rows = {{0.0, 1.0, 1.0, 1.0, 2.0, 3.0}};
    const std::string scaling = emit_plot_script(sc, "scaling");
    CHECK(scaling.find("logscale xy") != std::string::npos);
    CHECK(scaling.find("slope-2") != std::string::npos);

    RunRecord bad;
    bad.columns = {"x"};
    CHECK_THROWS_WITH_AS(emit_plot_script(bad, "decay"), doctest::Contains("n_prev"),
                         config_error);
    CHECK_THROWS_AS(emit_plot_script(rec, "nonsense"), config_error);
}
