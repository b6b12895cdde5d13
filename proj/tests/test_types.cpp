#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tradewar/scenario.hpp"
#include "tradewar/types.hpp"

using namespace tradewar;

namespace {

EconomyData small_world() {
    ScenarioSpec spec;
    spec.n_countries = 2;
    spec.n_goods_sectors = 2;
    spec.include_services = true;
    spec.include_io = true;
    return symmetric_world(spec);
}

bool has_fatal(const ValidationReport& rep, const std::string& needle) {
    for (const auto& v : rep.violations)
        if (v.severity == Severity::Fatal && v.message.find(needle) != std::string::npos)
            return true;
    return false;
}

}  // namespace

TEST_CASE("array indexing is row-major and round-trips") {
    Array3 a(2, 3, 4, 0.0);
    double v = 0.0;
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            for (std::size_t k = 0; k < 4; ++k) a(i, j, k) = v++;
    CHECK(a.raw().size() == 24);
    CHECK(a(0, 0, 0) == 0.0);
    CHECK(a(0, 0, 1) == 1.0);  // last index fastest
    CHECK(a(0, 1, 0) == 4.0);
    CHECK(a(1, 0, 0) == 12.0);
    CHECK(a.flat(1, 2, 3) == 23);
}

TEST_CASE("id lookups") {
    const EconomyData data = small_world();
    CHECK(data.country_index("C2") == 1);
    CHECK(data.sector_index("srv") == 2);
    CHECK_THROWS(data.country_index("nope"));
    CHECK_THROWS(data.sector_index("nope"));
}

TEST_CASE("a consistent economy validates cleanly") {
    const ValidationReport rep = validate(small_world());
    CHECK(rep.clean());
    CHECK(rep.violations.empty());
    CHECK(rep.world_deficit_sum == doctest::Approx(0.0));
}

TEST_CASE("dimension mismatches are fatal and stop further checks") {
    EconomyData data = small_world();
    data.gdp.pop_back();
    const ValidationReport rep = validate(data);
    CHECK(!rep.clean());
    CHECK(has_fatal(rep, "gdp vector"));
}

TEST_CASE("substitution elasticity must exceed one") {
    EconomyData data = small_world();
    data.sectors[0].elasticity = 1.0;
    CHECK(has_fatal(validate(data), "elasticity <= 1"));
}

TEST_CASE("flow and tariff cell checks") {
    EconomyData data = small_world();
    data.flows(0, 1, 0) = -1.0;
    CHECK(has_fatal(validate(data), "negative flow"));

    data = small_world();
    data.tariffs.tau(0, 1, 0) = 0.9;
    CHECK(has_fatal(validate(data), "below 1"));

    data = small_world();
    data.tariffs.tau(0, 0, 0) = 1.1;
    CHECK(has_fatal(validate(data), "domestic tariff"));

    data = small_world();
    data.tariffs.tau(0, 1, 2) = 1.1;  // srv
    CHECK(has_fatal(validate(data), "service sector tariffed"));
}

TEST_CASE("intermediate use cannot exceed gross output") {
    EconomyData data = small_world();
    double sales = 0.0;
    for (std::size_t i = 0; i < 2; ++i) sales += data.flows(i, 0, 0);
    data.io_usage(0, 0, 0) = sales * 1.5;
    CHECK(has_fatal(validate(data), "exceeds gross output"));
}

TEST_CASE("nonzero world deficit sum is a warning, not fatal") {
    EconomyData data = small_world();
    data.flows(0, 1, 0) += 5.0;  // one-sided bump
    const ValidationReport rep = validate(data);
    CHECK(rep.clean());
    CHECK(rep.world_deficit_sum == doctest::Approx(0.0));  // closed world: sums cancel
    bool warned = false;
    for (const auto& v : rep.violations) warned |= v.severity == Severity::Warning;
    CHECK(!warned);
}

TEST_CASE("taxable sector selection") {
    const EconomyData data = small_world();
    const auto tx = taxable_sectors(data);
    REQUIRE(tx.size() == 2);
    CHECK(tx[0] == 0);
    CHECK(tx[1] == 1);
}
