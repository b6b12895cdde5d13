#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tradewar/calibration.hpp"
#include "tradewar/cp.hpp"
#include "tradewar/data_io.hpp"
#include "tradewar/scenario.hpp"
#include "tradewar/solver.hpp"

#include <filesystem>
#include <fstream>

using namespace tradewar;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("tw_io_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void spit(const fs::path& p, const std::string& body) {
    std::ofstream out(p, std::ios::binary);
    out << body;
}

EconomyData sample_economy() {
    ScenarioSpec spec;
    spec.n_countries = 3;
    spec.n_goods_sectors = 2;
    spec.include_services = true;
    spec.include_io = true;
    EconomyData data = inject_bilateral_deficit(symmetric_world(spec), 0, 1, 7.0);
    data.tariffs.tau(0, 1, 0) = 1.1;        // 10%
    data.tariffs.tau(2, 1, 1) = 1.0325;     // fractional rate survives the round-trip
    return data;
}

}  // namespace

TEST_CASE("economy bundle round-trips byte-identically") {
    TempDir dir;
    const EconomyData data = sample_economy();
    const EconomyPaths paths = EconomyPaths::in_dir(dir.path);
    save_economy(data, paths);

    const LoadResult lr = load_economy(paths);
    CHECK(lr.warnings.empty());
    CHECK(lr.data.countries == data.countries);
    REQUIRE(lr.data.flows.raw().size() == data.flows.raw().size());
    for (std::size_t k = 0; k < data.flows.raw().size(); ++k)
        CHECK(lr.data.flows.raw()[k] == data.flows.raw()[k]);
    for (std::size_t k = 0; k < data.tariffs.tau.raw().size(); ++k)
        CHECK(lr.data.tariffs.tau.raw()[k] == doctest::Approx(data.tariffs.tau.raw()[k]).epsilon(1e-15));

    // canonical files reload and re-save to identical bytes
    TempDir dir2;
    const EconomyPaths paths2 = EconomyPaths::in_dir(dir2.path);
    save_economy(lr.data, paths2);
    CHECK(slurp(paths.flows) == slurp(paths2.flows));
    CHECK(slurp(paths.io) == slurp(paths2.io));
    CHECK(slurp(paths.tariffs) == slurp(paths2.tariffs));
    CHECK(slurp(paths.sectors) == slurp(paths2.sectors));
    CHECK(slurp(paths.gdp) == slurp(paths2.gdp));
}

TEST_CASE("missing tariff cells default to zero with a warning") {
    TempDir dir;
    save_economy(sample_economy(), EconomyPaths::in_dir(dir.path));
    spit(dir.path / "tariffs.csv",
         "importer,exporter,sector,rate_percent\nC1,C2,g1,10\n");
    const LoadResult lr = load_economy(EconomyPaths::in_dir(dir.path));
    CHECK(lr.data.tariffs.tau(0, 1, 0) == doctest::Approx(1.1));
    CHECK(lr.data.tariffs.tau(1, 0, 0) == 1.0);
    // 3 countries x 2 partners x 2 goods sectors = 12 cross cells, 1 supplied
    CHECK(lr.warnings.size() == 11);
}

TEST_CASE("malformed bundles are rejected with located errors") {
    TempDir dir;
    const EconomyPaths paths = EconomyPaths::in_dir(dir.path);
    save_economy(sample_economy(), paths);

    SUBCASE("bad header") {
        spit(paths.flows, "importer,exporter,value\n");
        CHECK_THROWS_WITH_AS(load_economy(paths), doctest::Contains("expected header"),
                             std::runtime_error);
    }
    SUBCASE("unknown country") {
        spit(paths.flows, "importer,exporter,sector,value\nXX,C1,g1,1\n");
        CHECK_THROWS_WITH_AS(load_economy(paths), doctest::Contains("row 2"),
                             std::runtime_error);
    }
    SUBCASE("duplicate cell") {
        spit(paths.flows,
             "importer,exporter,sector,value\nC1,C2,g1,1\nC1,C2,g1,2\n");
        CHECK_THROWS_WITH_AS(load_economy(paths), doctest::Contains("duplicate cell"),
                             std::runtime_error);
    }
    SUBCASE("bad number") {
        spit(paths.gdp, "country,value\nC1,abc\n");
        CHECK_THROWS_WITH_AS(load_economy(paths), doctest::Contains("bad number"),
                             std::runtime_error);
    }
    SUBCASE("duplicate sector id") {
        spit(paths.sectors,
             "id,name,elasticity,is_service\ng1,a,5.5,0\ng1,b,5.5,0\n");
        CHECK_THROWS_WITH_AS(load_economy(paths), doctest::Contains("duplicate sector"),
                             std::runtime_error);
    }
}

TEST_CASE("model JSON round-trip is bit-exact") {
    TempDir dir;
    const CalibratedModel model = calibrate(sample_economy());
    const fs::path f1 = dir.path / "m1.json", f2 = dir.path / "m2.json";
    save_model(model, f1);
    const CalibratedModel back = load_model(f1);
    save_model(back, f2);
    CHECK(slurp(f1) == slurp(f2));
    for (std::size_t k = 0; k < model.gamma.raw().size(); ++k)
        CHECK(back.gamma.raw()[k] == model.gamma.raw()[k]);
    for (std::size_t k = 0; k < model.a.raw().size(); ++k)
        CHECK(back.a.raw()[k] == model.a.raw()[k]);
    CHECK(back.L == model.L);
    CHECK(back.D == model.D);
    CHECK(back.baseline_labor_income == model.baseline_labor_income);

    CHECK_THROWS(load_model(dir.path / "missing.json"));
}

TEST_CASE("cp model JSON round-trip is bit-exact") {
    TempDir dir;
    const CPModel cp = calibrate_cp(sample_economy(), {4.0, 4.0, 4.0});
    const fs::path f1 = dir.path / "cp1.json", f2 = dir.path / "cp2.json";
    save_cp_model(cp, f1);
    save_cp_model(load_cp_model(f1), f2);
    CHECK(slurp(f1) == slurp(f2));
    // model kinds are not interchangeable
    CHECK_THROWS(load_model(f1));
}

TEST_CASE("equilibrium serialization carries the solution") {
    TempDir dir;
    const CalibratedModel model = calibrate(sample_economy());
    const SolveOutcome out = solve_counterfactual(model, model.baseline_tariffs);
    REQUIRE(out.ok());
    save_equilibrium(out.eq, dir.path / "eq.json");
    const std::string body = slurp(dir.path / "eq.json");
    CHECK(body.find("\"w\"") != std::string::npos);
    CHECK(body.find("\"deficits_realized\"") != std::string::npos);
}

TEST_CASE("standalone tariff csv") {
    TempDir dir;
    const EconomyData data = sample_economy();
    save_tariff_csv(data.tariffs, data.countries, data.sectors, dir.path / "t.csv");
    std::vector<std::string> warnings;
    const TariffSchedule back =
        load_tariff_csv(dir.path / "t.csv", data.countries, data.sectors, &warnings);
    CHECK(warnings.empty());
    for (std::size_t k = 0; k < data.tariffs.tau.raw().size(); ++k)
        CHECK(back.tau.raw()[k] == doctest::Approx(data.tariffs.tau.raw()[k]).epsilon(1e-15));
}

TEST_CASE("report table") {
    std::vector<SectorInfo> sectors{{"g1", "goods 1", 5.5, false},
                                    {"srv", "services", 5.5, true},
                                    {"g2", "goods 2", 5.5, false}};
    const std::string table = emit_table(sectors, {1.10, 1.20}, {30.0, 10.0}, 0.1234);
    CHECK(table == "sector,rate_percent\n"
                   "g1,10.00\n"
                   "g2,20.00\n"
                   "weighted_average,12.50\n"
                   "delta_w_pct,0.1234\n");
    CHECK(trade_weighted_rate({1.10, 1.20}, {30.0, 10.0}) == doctest::Approx(12.5));
    CHECK_THROWS(trade_weighted_rate({}, {}));
    CHECK_THROWS(emit_table(sectors, {1.1}, {1.0, 1.0}, 0.0));
}
