#include "tradewar/data_io.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace tradewar {

namespace {

using nlohmann::json;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_number(const std::string& s, const std::string& file, int row) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != s.size())
        throw std::runtime_error(file + ": row " + std::to_string(row) + ": bad number '" + s +
                                 "'");
    return v;
}

struct CsvReader {
    std::string file;
    std::vector<std::vector<std::string>> rows;  // header removed

    CsvReader(const std::filesystem::path& path, const std::string& expected_header)
        : file(path.string()) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open " + file);
        std::string line;
        if (!std::getline(in, line)) throw std::runtime_error(file + ": empty file");
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line != expected_header)
            throw std::runtime_error(file + ": expected header '" + expected_header + "', got '" +
                                     line + "'");
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            rows.push_back(split_csv_line(line));
        }
    }
};

json array2_to_json(const Array2& a) {
    return json{{"dims", {a.dim1(), a.dim2()}}, {"data", a.raw()}};
}

json array3_to_json(const Array3& a) {
    return json{{"dims", {a.dim1(), a.dim2(), a.dim3()}}, {"data", a.raw()}};
}

Array2 array2_from_json(const json& j) {
    Array2 a(j.at("dims").at(0).get<std::size_t>(), j.at("dims").at(1).get<std::size_t>());
    a.raw() = j.at("data").get<std::vector<double>>();
    if (a.raw().size() != a.dim1() * a.dim2()) throw std::runtime_error("array size mismatch");
    return a;
}

Array3 array3_from_json(const json& j) {
    Array3 a(j.at("dims").at(0).get<std::size_t>(), j.at("dims").at(1).get<std::size_t>(),
             j.at("dims").at(2).get<std::size_t>());
    a.raw() = j.at("data").get<std::vector<double>>();
    if (a.raw().size() != a.dim1() * a.dim2() * a.dim3())
        throw std::runtime_error("array size mismatch");
    return a;
}

json sectors_to_json(const std::vector<SectorInfo>& sectors) {
    json arr = json::array();
    for (const auto& s : sectors)
        arr.push_back({{"id", s.id},
                       {"name", s.name},
                       {"elasticity", s.elasticity},
                       {"is_service", s.is_service}});
    return arr;
}

std::vector<SectorInfo> sectors_from_json(const json& arr) {
    std::vector<SectorInfo> out;
    for (const auto& j : arr)
        out.push_back({j.at("id").get<std::string>(), j.at("name").get<std::string>(),
                       j.at("elasticity").get<double>(), j.at("is_service").get<bool>()});
    return out;
}

json load_json_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open " + file.string());
    json j;
    in >> j;
    return j;
}

void write_json_file(const json& j, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out << j.dump(2) << '\n';
}

}  // namespace

LoadResult load_economy(const EconomyPaths& paths) {
    LoadResult res;
    EconomyData& data = res.data;

    {
        const CsvReader r(paths.sectors, "id,name,elasticity,is_service");
        int row = 1;
        for (const auto& f : r.rows) {
            ++row;
            if (f.size() != 4)
                throw std::runtime_error(r.file + ": row " + std::to_string(row) +
                                         ": expected 4 fields");
            SectorInfo s;
            s.id = f[0];
            s.name = f[1];
            s.elasticity = parse_number(f[2], r.file, row);
            if (f[3] != "0" && f[3] != "1")
                throw std::runtime_error(r.file + ": row " + std::to_string(row) +
                                         ": is_service must be 0 or 1");
            s.is_service = f[3] == "1";
            for (const auto& prev : data.sectors)
                if (prev.id == s.id)
                    throw std::runtime_error(r.file + ": duplicate sector id " + s.id);
            data.sectors.push_back(std::move(s));
        }
    }
    {
        const CsvReader r(paths.gdp, "country,value");
        int row = 1;
        for (const auto& f : r.rows) {
            ++row;
            if (f.size() != 2)
                throw std::runtime_error(r.file + ": row " + std::to_string(row) +
                                         ": expected 2 fields");
            for (const auto& prev : data.countries)
                if (prev == f[0])
                    throw std::runtime_error(r.file + ": duplicate country " + f[0]);
            data.countries.push_back(f[0]);
            data.gdp.push_back(parse_number(f[1], r.file, row));
        }
    }

    const std::size_t J = data.country_count(), S = data.sector_count();
    data.flows = Array3(J, J, S, 0.0);
    data.io_usage = Array3(J, S, S, 0.0);
    data.tariffs = TariffSchedule::ones(J, S);

    auto country_at = [&](const std::string& id, const std::string& file, int row) {
        for (std::size_t i = 0; i < J; ++i)
            if (data.countries[i] == id) return i;
        throw std::runtime_error(file + ": row " + std::to_string(row) + ": unknown country '" +
                                 id + "'");
    };
    auto sector_at = [&](const std::string& id, const std::string& file, int row) {
        for (std::size_t s = 0; s < S; ++s)
            if (data.sectors[s].id == id) return s;
        throw std::runtime_error(file + ": row " + std::to_string(row) + ": unknown sector '" +
                                 id + "'");
    };

    {
        const CsvReader r(paths.flows, "importer,exporter,sector,value");
        std::set<std::size_t> seen;
        int row = 1;
        for (const auto& f : r.rows) {
            ++row;
            if (f.size() != 4)
                throw std::runtime_error(r.file + ": row " + std::to_string(row) +
                                         ": expected 4 fields");
            const std::size_t i = country_at(f[0], r.file, row);
            const std::size_t j = country_at(f[1], r.file, row);
            const std::size_t s = sector_at(f[2], r.file, row);
            if (!seen.insert(data.flows.flat(i, j, s)).second)
                throw std::runtime_error(r.file + ": row " + std::to_string(row) +
                                         ": duplicate cell");
            data.flows(i, j, s) = parse_number(f[3], r.file, row);
        }
    }
    {
        const CsvReader r(paths.io, "country,using_sector,input_sector,value");
        std::set<std::size_t> seen;
        int row = 1;
        for (const auto& f : r.rows) {
            ++row;
            if (f.size() != 4)
                throw std::runtime_error(r.file + ": row " + std::to_string(row) +
                                         ": expected 4 fields");
            const std::size_t c = country_at(f[0], r.file, row);
            const std::size_t us = sector_at(f[1], r.file, row);
            const std::size_t is = sector_at(f[2], r.file, row);
            if (!seen.insert(data.io_usage.flat(c, us, is)).second)
                throw std::runtime_error(r.file + ": row " + std::to_string(row) +
                                         ": duplicate cell");
            data.io_usage(c, us, is) = parse_number(f[3], r.file, row);
        }
    }
    {
        const CsvReader r(paths.tariffs, "importer,exporter,sector,rate_percent");
        std::set<std::size_t> seen;
        int row = 1;
        for (const auto& f : r.rows) {
            ++row;
            if (f.size() != 4)
                throw std::runtime_error(r.file + ": row " + std::to_string(row) +
                                         ": expected 4 fields");
            const std::size_t i = country_at(f[0], r.file, row);
            const std::size_t j = country_at(f[1], r.file, row);
            const std::size_t s = sector_at(f[2], r.file, row);
            if (!seen.insert(data.tariffs.tau.flat(i, j, s)).second)
                throw std::runtime_error(r.file + ": row " + std::to_string(row) +
                                         ": duplicate cell");
            data.tariffs.tau(i, j, s) = 1.0 + parse_number(f[3], r.file, row) / 100.0;
        }
        // missing cross-border goods cells default to free trade, with a note
        for (std::size_t i = 0; i < J; ++i)
            for (std::size_t j = 0; j < J; ++j) {
                if (i == j) continue;
                for (std::size_t s = 0; s < S; ++s)
                    if (!data.sectors[s].is_service &&
                        !seen.count(data.tariffs.tau.flat(i, j, s)))
                        res.warnings.push_back("tariff cell (" + data.countries[i] + "," +
                                               data.countries[j] + "," + data.sectors[s].id +
                                               ") missing; defaulting to 0%");
            }
    }
    return res;
}

void save_economy(const EconomyData& data, const EconomyPaths& paths) {
    const std::size_t J = data.country_count(), S = data.sector_count();
    auto open = [](const std::filesystem::path& p) {
        std::ofstream out(p);
        if (!out) throw std::runtime_error("cannot write " + p.string());
        return out;
    };

    {
        auto out = open(paths.sectors);
        out << "id,name,elasticity,is_service\n";
        for (const auto& s : data.sectors)
            out << s.id << ',' << s.name << ',' << fmt(s.elasticity) << ','
                << (s.is_service ? 1 : 0) << '\n';
    }
    {
        auto out = open(paths.gdp);
        out << "country,value\n";
        for (std::size_t i = 0; i < J; ++i)
            out << data.countries[i] << ',' << fmt(data.gdp[i]) << '\n';
    }
    {
        auto out = open(paths.flows);
        out << "importer,exporter,sector,value\n";
        for (std::size_t i = 0; i < J; ++i)
            for (std::size_t j = 0; j < J; ++j)
                for (std::size_t s = 0; s < S; ++s)
                    out << data.countries[i] << ',' << data.countries[j] << ','
                        << data.sectors[s].id << ',' << fmt(data.flows(i, j, s)) << '\n';
    }
    {
        auto out = open(paths.io);
        out << "country,using_sector,input_sector,value\n";
        for (std::size_t c = 0; c < J; ++c)
            for (std::size_t us = 0; us < S; ++us)
                for (std::size_t is = 0; is < S; ++is)
                    if (data.io_usage(c, us, is) != 0.0)
                        out << data.countries[c] << ',' << data.sectors[us].id << ','
                            << data.sectors[is].id << ',' << fmt(data.io_usage(c, us, is))
                            << '\n';
    }
    {
        auto out = open(paths.tariffs);
        out << "importer,exporter,sector,rate_percent\n";
        for (std::size_t i = 0; i < J; ++i)
            for (std::size_t j = 0; j < J; ++j) {
                if (i == j) continue;
                for (std::size_t s = 0; s < S; ++s)
                    if (!data.sectors[s].is_service)
                        out << data.countries[i] << ',' << data.countries[j] << ','
                            << data.sectors[s].id << ','
                            << fmt((data.tariffs.tau(i, j, s) - 1.0) * 100.0) << '\n';
            }
    }
}

void save_model(const CalibratedModel& m, const std::filesystem::path& file) {
    json j;
    j["kind"] = "armington_model";
    j["countries"] = m.countries;
    j["sectors"] = sectors_to_json(m.sectors);
    j["gamma"] = array3_to_json(m.gamma);
    j["a"] = array2_to_json(m.a);
    j["alpha"] = array3_to_json(m.alpha);
    j["L"] = m.L;
    j["D"] = m.D;
    j["t"] = array3_to_json(m.t);
    j["z"] = array2_to_json(m.z);
    j["w0"] = m.w0;
    j["baseline_tariffs"] = array3_to_json(m.baseline_tariffs.tau);
    j["baseline_flows"] = array3_to_json(m.baseline_flows);
    j["baseline_io"] = array3_to_json(m.baseline_io);
    j["baseline_labor_income"] = m.baseline_labor_income;
    write_json_file(j, file);
}

CalibratedModel load_model(const std::filesystem::path& file) {
    const json j = load_json_file(file);
    if (j.value("kind", "") != "armington_model")
        throw std::runtime_error(file.string() + ": not a model file");
    CalibratedModel m;
    m.countries = j.at("countries").get<std::vector<std::string>>();
    m.sectors = sectors_from_json(j.at("sectors"));
    m.gamma = array3_from_json(j.at("gamma"));
    m.a = array2_from_json(j.at("a"));
    m.alpha = array3_from_json(j.at("alpha"));
    m.L = j.at("L").get<std::vector<double>>();
    m.D = j.at("D").get<std::vector<double>>();
    m.t = array3_from_json(j.at("t"));
    m.z = array2_from_json(j.at("z"));
    m.w0 = j.at("w0").get<std::vector<double>>();
    m.baseline_tariffs.tau = array3_from_json(j.at("baseline_tariffs"));
    m.baseline_flows = array3_from_json(j.at("baseline_flows"));
    m.baseline_io = array3_from_json(j.at("baseline_io"));
    m.baseline_labor_income = j.at("baseline_labor_income").get<double>();
    return m;
}

void save_cp_model(const CPModel& cp, const std::filesystem::path& file) {
    json j;
    j["kind"] = "cp_model";
    j["countries"] = cp.countries;
    j["sectors"] = sectors_to_json(cp.sectors);
    j["pi"] = array3_to_json(cp.pi);
    j["theta"] = cp.theta;
    j["gamma_l"] = array2_to_json(cp.gamma_l);
    j["gamma_io"] = array3_to_json(cp.gamma_io);
    j["alpha_c"] = array2_to_json(cp.alpha_c);
    j["X"] = array2_to_json(cp.X);
    j["L"] = cp.L;
    j["D"] = cp.D;
    j["I"] = cp.I;
    j["baseline_tariffs"] = array3_to_json(cp.baseline_tariffs.tau);
    j["baseline_labor_income"] = cp.baseline_labor_income;
    write_json_file(j, file);
}

CPModel load_cp_model(const std::filesystem::path& file) {
    const json j = load_json_file(file);
    if (j.value("kind", "") != "cp_model")
        throw std::runtime_error(file.string() + ": not a CP model file");
    CPModel cp;
    cp.countries = j.at("countries").get<std::vector<std::string>>();
    cp.sectors = sectors_from_json(j.at("sectors"));
    cp.pi = array3_from_json(j.at("pi"));
    cp.theta = j.at("theta").get<std::vector<double>>();
    cp.gamma_l = array2_from_json(j.at("gamma_l"));
    cp.gamma_io = array3_from_json(j.at("gamma_io"));
    cp.alpha_c = array2_from_json(j.at("alpha_c"));
    cp.X = array2_from_json(j.at("X"));
    cp.L = j.at("L").get<std::vector<double>>();
    cp.D = j.at("D").get<std::vector<double>>();
    cp.I = j.at("I").get<std::vector<double>>();
    cp.baseline_tariffs.tau = array3_from_json(j.at("baseline_tariffs"));
    cp.baseline_labor_income = j.at("baseline_labor_income").get<double>();
    return cp;
}

void save_equilibrium(const Equilibrium& eq, const std::filesystem::path& file) {
    json j;
    j["kind"] = "equilibrium";
    j["w"] = eq.w;
    j["p_sector"] = array2_to_json(eq.p_sector);
    j["p_bilateral"] = array3_to_json(eq.p_bilateral);
    j["y_bilateral"] = array3_to_json(eq.y_bilateral);
    j["y_sector"] = array2_to_json(eq.y_sector);
    j["labor"] = array3_to_json(eq.labor);
    j["io_usage"] = array3_to_json(eq.io_usage);
    j["consumption"] = array2_to_json(eq.consumption);
    j["flows"] = array3_to_json(eq.flows);
    j["tariff_revenue"] = eq.tariff_revenue;
    j["income"] = eq.income;
    j["deficits_realized"] = eq.deficits_realized;
    j["diagnostics"] = {{"outer_iterations", eq.diagnostics.outer_iterations},
                        {"inner_iterations", eq.diagnostics.inner_iterations},
                        {"labor_residual", eq.diagnostics.labor_residual},
                        {"goods_residual", eq.diagnostics.goods_residual}};
    write_json_file(j, file);
}

TariffSchedule load_tariff_csv(const std::filesystem::path& file,
                               const std::vector<std::string>& countries,
                               const std::vector<SectorInfo>& sectors,
                               std::vector<std::string>* warnings) {
    const std::size_t J = countries.size(), S = sectors.size();
    TariffSchedule sched = TariffSchedule::ones(J, S);
    const CsvReader r(file, "importer,exporter,sector,rate_percent");
    auto country_at = [&](const std::string& id, int row) {
        for (std::size_t i = 0; i < J; ++i)
            if (countries[i] == id) return i;
        throw std::runtime_error(r.file + ": row " + std::to_string(row) + ": unknown country '" +
                                 id + "'");
    };
    auto sector_at = [&](const std::string& id, int row) {
        for (std::size_t s = 0; s < S; ++s)
            if (sectors[s].id == id) return s;
        throw std::runtime_error(r.file + ": row " + std::to_string(row) + ": unknown sector '" +
                                 id + "'");
    };
    std::set<std::size_t> seen;
    int row = 1;
    for (const auto& f : r.rows) {
        ++row;
        if (f.size() != 4)
            throw std::runtime_error(r.file + ": row " + std::to_string(row) +
                                     ": expected 4 fields");
        const std::size_t i = country_at(f[0], row);
        const std::size_t j = country_at(f[1], row);
        const std::size_t s = sector_at(f[2], row);
        if (!seen.insert(sched.tau.flat(i, j, s)).second)
            throw std::runtime_error(r.file + ": row " + std::to_string(row) + ": duplicate cell");
        sched.tau(i, j, s) = 1.0 + parse_number(f[3], r.file, row) / 100.0;
    }
    if (warnings)
        for (std::size_t i = 0; i < J; ++i)
            for (std::size_t j = 0; j < J; ++j) {
                if (i == j) continue;
                for (std::size_t s = 0; s < S; ++s)
                    if (!sectors[s].is_service && !seen.count(sched.tau.flat(i, j, s)))
                        warnings->push_back("tariff cell (" + countries[i] + "," + countries[j] +
                                            "," + sectors[s].id +
                                            ") missing; defaulting to 0%");
            }
    return sched;
}

void save_tariff_csv(const TariffSchedule& tariffs, const std::vector<std::string>& countries,
                     const std::vector<SectorInfo>& sectors, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out << "importer,exporter,sector,rate_percent\n";
    for (std::size_t i = 0; i < countries.size(); ++i)
        for (std::size_t j = 0; j < countries.size(); ++j) {
            if (i == j) continue;
            for (std::size_t s = 0; s < sectors.size(); ++s)
                if (!sectors[s].is_service)
                    out << countries[i] << ',' << countries[j] << ',' << sectors[s].id << ','
                        << fmt((tariffs.tau(i, j, s) - 1.0) * 100.0) << '\n';
        }
}

double trade_weighted_rate(const std::vector<double>& tau_factors,
                           const std::vector<double>& weights) {
    if (tau_factors.empty() || tau_factors.size() != weights.size())
        throw std::runtime_error("weighted rate needs matching non-empty inputs");
    double acc = 0.0, wsum = 0.0;
    for (std::size_t k = 0; k < tau_factors.size(); ++k) {
        acc += weights[k] * (tau_factors[k] - 1.0) * 100.0;
        wsum += weights[k];
    }
    if (wsum <= 0.0) throw std::runtime_error("weighted rate needs positive weight mass");
    return acc / wsum;
}

std::string emit_table(const std::vector<SectorInfo>& sectors,
                       const std::vector<double>& tau_factors,
                       const std::vector<double>& baseline_trade, double delta_w_pct) {
    if (sectors.empty()) throw std::runtime_error("empty sector list");
    const std::vector<std::size_t> taxable = taxable_sectors(sectors);
    if (taxable.size() != tau_factors.size() || taxable.size() != baseline_trade.size())
        throw std::runtime_error("table inputs do not match the taxable sector count");

    std::ostringstream os;
    os << "sector,rate_percent\n";
    char buf[40];
    for (std::size_t k = 0; k < taxable.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.2f", (tau_factors[k] - 1.0) * 100.0);
        os << sectors[taxable[k]].id << ',' << buf << '\n';
    }
    std::snprintf(buf, sizeof buf, "%.2f", trade_weighted_rate(tau_factors, baseline_trade));
    os << "weighted_average," << buf << '\n';
    std::snprintf(buf, sizeof buf, "%.4f", delta_w_pct);
    os << "delta_w_pct," << buf << '\n';
    return os.str();
}

}  // namespace tradewar
