#include "tradewar/scenario.hpp"

#include <stdexcept>

namespace tradewar {

namespace {

void shift_pair(EconomyData& data, std::size_t importer, std::size_t exporter, double amount) {
    const auto goods = taxable_sectors(data.sectors);
    if (goods.empty()) throw std::runtime_error("scenario has no goods sectors to adjust");
    const double per = amount / static_cast<double>(goods.size());
    for (std::size_t s : goods) {
        const double next = data.flows(importer, exporter, s) + per;
        if (next < 0.0) throw std::runtime_error("deficit too large for scenario");
        data.flows(importer, exporter, s) = next;
    }
}

}  // namespace

EconomyData symmetric_world(const ScenarioSpec& spec) {
    if (spec.n_countries < 2) throw std::runtime_error("need at least 2 countries");
    if (spec.n_goods_sectors < 1) throw std::runtime_error("need at least 1 goods sector");
    if (spec.elasticity <= 1.0) throw std::runtime_error("elasticity must exceed 1");
    if (spec.io_intensity < 0.0 || spec.io_intensity >= 1.0)
        throw std::runtime_error("io intensity must lie in [0, 1)");

    const std::size_t J = spec.n_countries;
    const std::size_t S = spec.n_goods_sectors + (spec.include_services ? 1 : 0);

    EconomyData data;
    for (std::size_t i = 0; i < J; ++i) data.countries.push_back("C" + std::to_string(i + 1));
    for (std::size_t s = 0; s < spec.n_goods_sectors; ++s)
        data.sectors.push_back({"g" + std::to_string(s + 1), "goods " + std::to_string(s + 1),
                                spec.elasticity, false});
    if (spec.include_services)
        data.sectors.push_back({"srv", "services", spec.elasticity, true});

    const double cell = spec.expenditure_base / static_cast<double>(J * S);
    data.flows = Array3(J, J, S, cell);
    data.io_usage = Array3(J, S, S, 0.0);
    data.tariffs = TariffSchedule::ones(J, S);
    data.gdp.assign(J, spec.expenditure_base);

    if (spec.include_io) {
        // Each sector spends io_intensity of its gross output on intermediates,
        // split evenly over input sectors.
        for (std::size_t j = 0; j < J; ++j)
            for (std::size_t s = 0; s < S; ++s) {
                double sales = 0.0;
                for (std::size_t i = 0; i < J; ++i) sales += data.flows(i, j, s);
                for (std::size_t k = 0; k < S; ++k)
                    data.io_usage(j, s, k) = spec.io_intensity * sales / static_cast<double>(S);
            }
    }
    return data;
}

EconomyData inject_bilateral_deficit(EconomyData data, std::size_t i, std::size_t j, double d,
                                     DeficitMode mode, std::size_t third) {
    if (i == j || i >= data.country_count() || j >= data.country_count())
        throw std::runtime_error("bad country pair");
    if (d == 0.0) return data;

    shift_pair(data, i, j, d / 2.0);
    shift_pair(data, j, i, -d / 2.0);

    if (mode == DeficitMode::ThreeCountryBalanced) {
        if (third >= data.country_count() || third == i || third == j)
            throw std::runtime_error("balanced mode needs a distinct third country");
        // Route the aggregate offsets through the third country: i imports less
        // from it and exports more to it; mirror image for j.
        shift_pair(data, i, third, -d / 2.0);
        shift_pair(data, third, i, d / 2.0);
        shift_pair(data, j, third, d / 2.0);
        shift_pair(data, third, j, -d / 2.0);
    }
    return data;
}

EconomyData inject_aggregate_offset(EconomyData data, std::size_t i, std::size_t k, double amount) {
    if (i == k || i >= data.country_count() || k >= data.country_count())
        throw std::runtime_error("bad country pair");
    if (amount == 0.0) return data;
    shift_pair(data, i, k, amount / 2.0);
    shift_pair(data, k, i, -amount / 2.0);
    return data;
}

}  // namespace tradewar
