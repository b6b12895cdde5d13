// Command-line front end: scenario generation, calibration, counterfactual
// solves, tariff optimization, Nash games, and the small teaching model.
#include <CLI11.hpp>
#include <json.hpp>

#include "tradewar/calibration.hpp"
#include "tradewar/cp.hpp"
#include "tradewar/data_io.hpp"
#include "tradewar/imbalance.hpp"
#include "tradewar/nash.hpp"
#include "tradewar/optimizer.hpp"
#include "tradewar/scenario.hpp"
#include "tradewar/solver.hpp"
#include "tradewar/toy.hpp"
#include "tradewar/types.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

using nlohmann::json;
using namespace tradewar;

namespace {

constexpr const char* kVersion = "1.0.0";
constexpr std::uint64_t kDefaultSeed = 20240501;

struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- provenance -------------------------------------------------------------

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Everything that shapes the result goes into the hash; worker counts and
// output paths deliberately do not.
std::string config_string(const std::string& command, const GAConfig& ga,
                          const SolverOptions& sopts, const std::string& extra) {
    std::ostringstream os;
    os << command << '|' << ga.population << ',' << ga.elites << ',' << ga.crossover << ','
       << ga.mutation << ',' << ga.laplace_b << ',' << ga.power_top << ',' << ga.power_bottom
       << ',' << ga.lower << ',' << ga.upper << ',' << ga.quantum << ',' << ga.stall_tol << ','
       << ga.stall_limit << ',' << ga.generation_limit << ',' << ga.hybrid_stall_limit << ','
       << ga.hybrid_generation_limit << ',' << ga.outer_tol << ',' << ga.outer_rounds << '|'
       << sopts.tol_outer << ',' << sopts.tol_inner << ',' << sopts.max_outer << ','
       << sopts.max_inner << ',' << sopts.damping << '|' << extra;
    return os.str();
}

json provenance_json(const std::string& command, const GAConfig& ga, const SolverOptions& sopts,
                     const std::string& extra) {
    return json{{"version", kVersion},
                {"config_hash", hex64(fnv1a(config_string(command, ga, sopts, extra)))},
                {"rng_seed", ga.rng_seed}};
}

std::string provenance_csv(const std::string& command, const GAConfig& ga,
                           const SolverOptions& sopts, const std::string& extra) {
    std::ostringstream os;
    os << "# version " << kVersion << '\n'
       << "# config_hash " << hex64(fnv1a(config_string(command, ga, sopts, extra))) << '\n'
       << "# rng_seed " << ga.rng_seed << '\n';
    return os.str();
}

void write_text(const std::string& path, const std::string& body) {
    if (path.empty() || path == "-") {
        std::cout << body;
        return;
    }
    std::ofstream out(path);
    if (!out) throw DomainError("cannot write " + path);
    out << body;
}

void attach_provenance(const std::filesystem::path& file, const json& prov) {
    std::ifstream in(file);
    json j;
    in >> j;
    in.close();
    j["provenance"] = prov;
    std::ofstream out(file);
    out << j.dump(2) << '\n';
}

// --- config file ------------------------------------------------------------

// Flat `key = value` lines; '#' comments. Keys mirror the GA and solver knobs.
void apply_config_file(const std::string& path, GAConfig& ga, SolverOptions& sopts) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open config file " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream is(line);
        std::string key, eq, value;
        if (!(is >> key)) continue;
        if (!(is >> eq >> value) || eq != "=")
            throw DomainError(path + ": line " + std::to_string(lineno) +
                              ": expected 'key = value'");
        auto num = [&] { return std::stod(value); };
        auto inum = [&] { return std::stoi(value); };
        if (key == "population") ga.population = inum();
        else if (key == "elites") ga.elites = inum();
        else if (key == "crossover") ga.crossover = inum();
        else if (key == "mutation") ga.mutation = inum();
        else if (key == "laplace_b") ga.laplace_b = num();
        else if (key == "lower") ga.lower = num();
        else if (key == "upper") ga.upper = num();
        else if (key == "quantum") ga.quantum = num();
        else if (key == "stall_tol") ga.stall_tol = num();
        else if (key == "stall_limit") ga.stall_limit = inum();
        else if (key == "generation_limit") ga.generation_limit = inum();
        else if (key == "hybrid_stall_limit") ga.hybrid_stall_limit = inum();
        else if (key == "hybrid_generation_limit") ga.hybrid_generation_limit = inum();
        else if (key == "outer_tol") ga.outer_tol = num();
        else if (key == "outer_rounds") ga.outer_rounds = inum();
        else if (key == "rng_seed") ga.rng_seed = std::stoull(value);
        else if (key == "threads") ga.threads = inum();
        else if (key == "tol_outer") sopts.tol_outer = num();
        else if (key == "tol_inner") sopts.tol_inner = num();
        else if (key == "max_outer") sopts.max_outer = inum();
        else if (key == "max_inner") sopts.max_inner = inum();
        else if (key == "damping") sopts.damping = num();
        else
            throw DomainError(path + ": unknown config key '" + key + "'");
    }
}

// --- shared helpers ---------------------------------------------------------

std::size_t country_of(const std::vector<std::string>& countries, const std::string& name) {
    for (std::size_t i = 0; i < countries.size(); ++i)
        if (countries[i] == name) return i;
    throw DomainError("unknown country '" + name + "'");
}

void check_economy(const EconomyData& data) {
    const ValidationReport rep = validate(data);
    for (const auto& v : rep.violations)
        if (v.severity == Severity::Warning) std::cerr << "warning: " << v.message << '\n';
    if (!rep.clean()) {
        std::string msg = "invalid economy:";
        for (const auto& v : rep.violations)
            if (v.severity == Severity::Fatal) msg += "\n  " + v.message;
        throw DomainError(msg);
    }
}

std::vector<Candidate> read_seed_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open seed file " + path);
    std::vector<Candidate> seeds;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t,") == std::string::npos) continue;
        Candidate c;
        std::istringstream is(line);
        std::string field;
        while (std::getline(is, field, ',')) c.push_back(std::stod(field));
        seeds.push_back(std::move(c));
    }
    return seeds;
}

std::vector<std::string> taxable_ids(const std::vector<SectorInfo>& sectors) {
    std::vector<std::string> ids;
    for (std::size_t s : taxable_sectors(sectors)) ids.push_back(sectors[s].id);
    return ids;
}

json array3_json(const Array3& a) {
    return json{{"dims", {a.dim1(), a.dim2(), a.dim3()}}, {"data", a.raw()}};
}

Array3 array3_of(const json& j) {
    Array3 a(j.at("dims").at(0).get<std::size_t>(), j.at("dims").at(1).get<std::size_t>(),
             j.at("dims").at(2).get<std::size_t>());
    a.raw() = j.at("data").get<std::vector<double>>();
    return a;
}

std::string trace_csv(const BestResponse& br) {
    std::ostringstream os;
    os << "generation,best_welfare,stall_metric,stall_counter\n";
    char buf[64];
    for (const auto& row : br.trace) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g", row.best_welfare, row.stall_metric);
        os << row.generation << ',' << buf << ',' << row.stall_counter << '\n';
    }
    return os.str();
}

json best_response_json(const BestResponse& br, const std::vector<std::string>& sector_ids) {
    json rates = json::array(), factors = json::array();
    for (double t : br.tau) {
        factors.push_back(t);
        rates.push_back((t - 1.0) * 100.0);
    }
    return json{{"sectors", sector_ids},
                {"tau", factors},
                {"rate_percent", rates},
                {"welfare", br.welfare},
                {"generations", br.generations},
                {"failed_evaluations", br.failed_evaluations}};
}

// Engine selection shared by best-response / nash / verify. The CP path keeps
// only the shell of the Armington model (names, sectors, baseline tariffs)
// that the game loop needs.
struct Engine {
    std::string name = "armington";
    CalibratedModel model;      // armington engine, or shell for cp
    std::shared_ptr<CPModel> cp;
    bool participation = false;
    SolverOptions sopts;

    EvaluatorFactory factory() const {
        if (name == "cp") {
            auto cp_ptr = cp;
            auto so = sopts;
            return [cp_ptr, so](std::size_t chooser, std::size_t partner,
                                const TariffSchedule& current) -> std::unique_ptr<WelfareEvaluator> {
                return std::make_unique<CPEvaluator>(*cp_ptr, chooser, partner, current, so);
            };
        }
        return armington_factory(model, participation, sopts);
    }
};

Engine load_engine(const std::string& engine, const std::string& model_path,
                   const std::string& economy_dir, const std::vector<double>& theta,
                   bool participation, const SolverOptions& sopts) {
    Engine eng;
    eng.name = engine;
    eng.participation = participation;
    eng.sopts = sopts;
    if (engine == "cp") {
        if (economy_dir.empty() || theta.empty())
            throw DomainError("--engine cp needs --economy and --theta");
        const LoadResult lr = load_economy(EconomyPaths::in_dir(economy_dir));
        for (const auto& w : lr.warnings) std::cerr << "warning: " << w << '\n';
        check_economy(lr.data);
        eng.cp = std::make_shared<CPModel>(calibrate_cp(lr.data, theta));
        eng.model.countries = eng.cp->countries;
        eng.model.sectors = eng.cp->sectors;
        eng.model.baseline_tariffs = eng.cp->baseline_tariffs;
    } else if (engine == "armington") {
        if (model_path.empty()) throw DomainError("--model is required");
        eng.model = load_model(model_path);
    } else {
        throw DomainError("unknown engine '" + engine + "'");
    }
    return eng;
}

// --- subcommands ------------------------------------------------------------

// Empty format string means "the command's native format".
std::string pick_format(const std::string& requested, const std::string& native) {
    return requested.empty() ? native : requested;
}

int cmd_imbalance(const std::string& flows_path, const std::string& gdp_path,
                  const std::string& out, const std::string& format, const GAConfig& ga,
                  const SolverOptions& sopts) {
    FlowPanel panel;
    {
        std::ifstream in(flows_path);
        if (!in) throw DomainError("cannot open " + flows_path);
        std::string line;
        std::getline(in, line);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line != "importer,exporter,year,value")
            throw DomainError(flows_path + ": expected header importer,exporter,year,value");
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream is(line);
            std::string imp, exp, year, value;
            std::getline(is, imp, ',');
            std::getline(is, exp, ',');
            std::getline(is, year, ',');
            std::getline(is, value, ',');
            panel.add_flow(imp, exp, std::stoi(year), std::stod(value));
        }
    }
    {
        std::ifstream in(gdp_path);
        if (!in) throw DomainError("cannot open " + gdp_path);
        std::string line;
        std::getline(in, line);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line != "country,year,gdp")
            throw DomainError(gdp_path + ": expected header country,year,gdp");
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream is(line);
            std::string country, year, gdp;
            std::getline(is, country, ',');
            std::getline(is, year, ',');
            std::getline(is, gdp, ',');
            panel.gdp[{country, std::stoi(year)}] = std::stod(gdp);
        }
    }

    std::map<int, double> bilateral, aggregate;
    for (const auto& rec : panel.records) {
        if (bilateral.count(rec.year)) continue;
        bilateral[rec.year] = weighted_cross_section(panel, rec.year, ImbalanceMode::Bilateral);
        aggregate[rec.year] = weighted_cross_section(panel, rec.year, ImbalanceMode::Aggregate);
    }
    const std::map<int, double> ma_b = moving_average(bilateral, 5);
    const std::map<int, double> ma_a = moving_average(aggregate, 5);

    if (pick_format(format, "csv") == "json") {
        json rows = json::array();
        for (const auto& [year, b] : bilateral)
            rows.push_back({{"year", year},
                            {"bilateral_index", b},
                            {"aggregate_index", aggregate.at(year)},
                            {"ma5_bilateral", ma_b.at(year)},
                            {"ma5_aggregate", ma_a.at(year)}});
        json j{{"rows", rows},
               {"provenance",
                provenance_json("imbalance", ga, sopts, flows_path + "|" + gdp_path)}};
        write_text(out, j.dump(2) + "\n");
        return 0;
    }
    std::ostringstream os;
    os << provenance_csv("imbalance", ga, sopts, flows_path + "|" + gdp_path)
       << "# moving averages are trailing 5-year windows\n"
       << "year,bilateral_index,aggregate_index,ma5_bilateral,ma5_aggregate\n";
    char buf[128];
    for (const auto& [year, b] : bilateral) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g", year, b, aggregate.at(year),
                      ma_b.at(year), ma_a.at(year));
        os << buf << '\n';
    }
    write_text(out, os.str());
    return 0;
}

int cmd_scenario(const ScenarioSpec& spec, double deficit, const std::string& mode,
                 std::size_t pair_i, std::size_t pair_j, std::size_t third,
                 const std::string& out_dir, const GAConfig& ga, const SolverOptions& sopts) {
    EconomyData data = symmetric_world(spec);
    if (deficit != 0.0) {
        const DeficitMode m = mode == "balanced" ? DeficitMode::ThreeCountryBalanced
                                                 : DeficitMode::TwoCountry;
        data = inject_bilateral_deficit(std::move(data), pair_i, pair_j, deficit, m, third);
    }
    check_economy(data);
    std::filesystem::create_directories(out_dir);
    save_economy(data, EconomyPaths::in_dir(out_dir));
    std::ostringstream extra;
    extra << spec.n_countries << ',' << spec.n_goods_sectors << ',' << spec.include_services
          << ',' << spec.include_io << ',' << spec.expenditure_base << ',' << spec.elasticity
          << ',' << spec.io_intensity << ',' << deficit << ',' << mode << ',' << pair_i << ','
          << pair_j << ',' << third;
    write_text((std::filesystem::path(out_dir) / "provenance.txt").string(),
               provenance_csv("scenario", ga, sopts, extra.str()));
    return 0;
}

int cmd_calibrate(const std::string& in_dir, const std::string& mode, const std::string& out,
                  const GAConfig& ga, const SolverOptions& sopts) {
    const LoadResult lr = load_economy(EconomyPaths::in_dir(in_dir));
    for (const auto& w : lr.warnings) std::cerr << "warning: " << w << '\n';
    check_economy(lr.data);

    CalibrationOptions copts;
    CalibratedModel model;
    if (mode == "iceberg") {
        copts.mode = CalibrationOptions::Mode::Iceberg;
        model = calibrate_iceberg(lr.data, copts);
    } else if (mode == "preferences") {
        model = calibrate(lr.data, copts);
    } else {
        throw DomainError("unknown calibration mode '" + mode + "'");
    }
    save_model(model, out);
    attach_provenance(out, provenance_json("calibrate", ga, sopts, in_dir + "|" + mode));
    return 0;
}

int cmd_solve(const std::string& model_path, const std::string& tariff_path,
              const std::string& out_eq, const std::string& out_welfare,
              const std::string& format, const GAConfig& ga, SolverOptions sopts) {
    const CalibratedModel model = load_model(model_path);
    TariffSchedule tariffs = model.baseline_tariffs;
    if (!tariff_path.empty()) {
        std::vector<std::string> warnings;
        tariffs = load_tariff_csv(tariff_path, model.countries, model.sectors, &warnings);
        for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    }

    const SolveOutcome base = solve_counterfactual(model, model.baseline_tariffs, sopts);
    if (!base.ok()) throw DomainError("baseline solve failed: " + base.message);
    const SolveOutcome cf = solve_counterfactual(model, tariffs, sopts);
    if (!cf.ok()) throw DomainError("counterfactual solve failed: " + cf.message);

    if (!out_eq.empty()) {
        save_equilibrium(cf.eq, out_eq);
        attach_provenance(out_eq,
                          provenance_json("solve", ga, sopts, model_path + "|" + tariff_path));
    }
    const WelfareReport rep = welfare(model, base.eq, cf.eq);
    if (pick_format(format, "csv") == "json") {
        json rows = json::array();
        for (std::size_t i = 0; i < model.countries.size(); ++i)
            rows.push_back({{"country", model.countries[i]},
                            {"welfare", rep.welfare[i]},
                            {"beta", rep.beta[i]},
                            {"delta_pct", rep.delta_pct[i]}});
        json j{{"rows", rows},
               {"provenance", provenance_json("solve", ga, sopts, model_path + "|" + tariff_path)}};
        write_text(out_welfare, j.dump(2) + "\n");
        return 0;
    }
    std::ostringstream os;
    os << provenance_csv("solve", ga, sopts, model_path + "|" + tariff_path)
       << "country,welfare,beta,delta_pct\n";
    char buf[160];
    for (std::size_t i = 0; i < model.countries.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g", model.countries[i].c_str(),
                      rep.welfare[i], rep.beta[i], rep.delta_pct[i]);
        os << buf << '\n';
    }
    write_text(out_welfare, os.str());
    return 0;
}

int cmd_elasticity(const std::string& model_path, const std::string& importer,
                   const std::string& exporter, const std::string& sector, const std::string& out,
                   const std::string& format, const GAConfig& ga, const SolverOptions& sopts) {
    const CalibratedModel model = load_model(model_path);
    const std::size_t i = country_of(model.countries, importer);
    const std::size_t j = country_of(model.countries, exporter);
    std::size_t s = model.sectors.size();
    for (std::size_t k = 0; k < model.sectors.size(); ++k)
        if (model.sectors[k].id == sector) s = k;
    if (s == model.sectors.size()) throw DomainError("unknown sector '" + sector + "'");
    const double zeta = numerical_elasticity(model, i, j, s, sopts);
    if (pick_format(format, "csv") == "json") {
        json jj{{"importer", importer},
                {"exporter", exporter},
                {"sector", sector},
                {"elasticity", zeta},
                {"provenance",
                 provenance_json("elasticity", ga, sopts,
                                 model_path + "|" + importer + "|" + exporter + "|" + sector)}};
        write_text(out, jj.dump(2) + "\n");
        return 0;
    }
    std::ostringstream os;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", zeta);
    os << provenance_csv("elasticity", ga, sopts,
                         model_path + "|" + importer + "|" + exporter + "|" + sector)
       << "importer,exporter,sector,elasticity\n"
       << importer << ',' << exporter << ',' << sector << ',' << buf << '\n';
    write_text(out, os.str());
    return 0;
}

int cmd_toy(const ToyParams& params, const std::string& sweep, double from, double to, int steps,
            double grid_lo, double grid_hi, double grid_step, const std::string& out,
            const std::string& format, const GAConfig& ga, const SolverOptions& sopts) {
    std::ostringstream extra;
    extra << params.E1 << ',' << params.E2 << ',' << params.sigma1 << ',' << params.sigma2 << ','
          << params.tau1 << ',' << params.tau2 << ',' << params.d << '|' << sweep;
    if (sweep.empty()) {
        const ToyEquilibrium eq = solve_toy(params);
        if (pick_format(format, "json") == "csv") {
            std::ostringstream os;
            os << provenance_csv("toy", ga, sopts, extra.str()) << "key,value\n";
            char buf[64];
            const std::pair<const char*, double> fields[] = {
                {"p", eq.p},     {"c11", eq.c11}, {"c21", eq.c21},       {"c12", eq.c12},
                {"c22", eq.c22}, {"T1", eq.T1},   {"T2", eq.T2},         {"lambda2", eq.lambda2},
                {"U1", eq.U1},   {"U2", eq.U2}};
            for (const auto& [key, value] : fields) {
                std::snprintf(buf, sizeof buf, "%.17g", value);
                os << key << ',' << buf << '\n';
            }
            write_text(out, os.str());
            return 0;
        }
        json j{{"p", eq.p},         {"c11", eq.c11}, {"c21", eq.c21}, {"c12", eq.c12},
               {"c22", eq.c22},     {"T1", eq.T1},   {"T2", eq.T2},   {"lambda2", eq.lambda2},
               {"U1", eq.U1},       {"U2", eq.U2}};
        j["provenance"] = provenance_json("toy", ga, sopts, extra.str());
        write_text(out, j.dump(2) + "\n");
        return 0;
    }
    if (sweep != "d" && sweep != "tau2") throw DomainError("--sweep must be 'd' or 'tau2'");
    if (steps < 2) throw DomainError("--sweep-steps must be at least 2");
    json rows = json::array();
    std::ostringstream os;
    os << provenance_csv("toy", ga, sopts, extra.str()) << sweep << ",tau1_star,tau2_star\n";
    char buf[128];
    for (int k = 0; k < steps; ++k) {
        const double v = from + (to - from) * k / (steps - 1);
        ToyParams p = params;
        (sweep == "d" ? p.d : p.tau2) = v;
        const ToyGridResult r1 = optimal_tariff_grid(p, grid_lo, grid_hi, grid_step);
        const ToyGridResult r2 = optimal_tariff_country2(p, grid_lo, grid_hi, grid_step);
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g", v, r1.tau_star, r2.tau_star);
        os << buf << '\n';
        rows.push_back({{sweep, v}, {"tau1_star", r1.tau_star}, {"tau2_star", r2.tau_star}});
    }
    if (pick_format(format, "csv") == "json") {
        json j{{"rows", rows}, {"provenance", provenance_json("toy", ga, sopts, extra.str())}};
        write_text(out, j.dump(2) + "\n");
        return 0;
    }
    write_text(out, os.str());
    return 0;
}

int cmd_best_response(const Engine& eng, const std::string& chooser_name,
                      const std::string& partner_name, bool uniform,
                      const std::string& seed_file, const std::string& out,
                      const std::string& trace, const std::string& format, const GAConfig& ga,
                      const SolverOptions& sopts, const std::string& extra) {
    const std::size_t chooser = country_of(eng.model.countries, chooser_name);
    const std::size_t partner = country_of(eng.model.countries, partner_name);
    if (chooser == partner) throw DomainError("chooser and partner must differ");

    std::vector<Candidate> seeds;
    if (!seed_file.empty()) seeds = read_seed_file(seed_file);

    const auto base_eval = eng.factory()(chooser, partner, eng.model.baseline_tariffs);
    BestResponse br;
    const std::vector<std::string> ids = taxable_ids(eng.model.sectors);
    if (uniform) {
        const UniformEvaluator u(*base_eval);
        for (auto& s : seeds)
            if (s.size() != 1) throw DomainError("uniform seeds must have one entry per line");
        br = optimize(u, ga, seeds);
        br.tau.assign(ids.size(), br.tau.at(0));
    } else {
        br = optimize(*base_eval, ga, seeds);
    }

    if (pick_format(format, "json") == "csv") {
        std::ostringstream os;
        char buf[64];
        os << provenance_csv("best-response", ga, sopts, extra) << "# chooser " << chooser_name
           << '\n'
           << "# partner " << partner_name << '\n';
        std::snprintf(buf, sizeof buf, "%.17g", br.welfare);
        os << "# welfare " << buf << '\n'
           << "# generations " << br.generations << '\n'
           << "# failed_evaluations " << br.failed_evaluations << '\n'
           << "sector,tau,rate_percent\n";
        for (std::size_t s = 0; s < ids.size(); ++s) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g", br.tau[s], (br.tau[s] - 1.0) * 100.0);
            os << ids[s] << ',' << buf << '\n';
        }
        write_text(out, os.str());
    } else {
        json j = best_response_json(br, ids);
        j["chooser"] = chooser_name;
        j["partner"] = partner_name;
        j["uniform"] = uniform;
        j["provenance"] = provenance_json("best-response", ga, sopts, extra);
        write_text(out, j.dump(2) + "\n");
    }
    if (!trace.empty())
        write_text(trace, provenance_csv("best-response", ga, sopts, extra) + trace_csv(br));
    return 0;
}

int cmd_nash(const Engine& eng, const std::string& i_name, const std::string& j_name,
             const NashOptions& nopts, const std::string& out, const std::string& format,
             const GAConfig& ga, const SolverOptions& sopts, const std::string& extra) {
    const std::size_t i = country_of(eng.model.countries, i_name);
    const std::size_t j = country_of(eng.model.countries, j_name);
    if (i == j) throw DomainError("the two players must differ");

    const NashResult res = nash(eng.model, i, j, ga, eng.factory(), nopts);

    if (pick_format(format, "json") == "csv") {
        const std::vector<std::string> ids = taxable_ids(eng.model.sectors);
        std::ostringstream os;
        char buf[64];
        os << provenance_csv("nash", ga, sopts, extra);
        std::snprintf(buf, sizeof buf, "%.17g", res.welfare_i);
        os << "# welfare_i " << buf << '\n';
        std::snprintf(buf, sizeof buf, "%.17g", res.welfare_j);
        os << "# welfare_j " << buf << '\n'
           << "# rounds " << res.rounds << '\n'
           << "# converged " << (res.converged ? 1 : 0) << '\n'
           << "side,country,sector,tau\n";
        for (std::size_t s = 0; s < ids.size(); ++s) {
            std::snprintf(buf, sizeof buf, "%.17g", res.tau_i[s]);
            os << "i," << i_name << ',' << ids[s] << ',' << buf << '\n';
        }
        for (std::size_t s = 0; s < ids.size(); ++s) {
            std::snprintf(buf, sizeof buf, "%.17g", res.tau_j[s]);
            os << "j," << j_name << ',' << ids[s] << ',' << buf << '\n';
        }
        write_text(out, os.str());
        if (!res.converged) throw DomainError("best-response iteration did not converge");
        return 0;
    }

    json out_j{{"i", i_name},
               {"j", j_name},
               {"i_index", i},
               {"j_index", j},
               {"sectors", taxable_ids(eng.model.sectors)},
               {"tau_i", res.tau_i},
               {"tau_j", res.tau_j},
               {"welfare_i", res.welfare_i},
               {"welfare_j", res.welfare_j},
               {"rounds", res.rounds},
               {"converged", res.converged},
               {"multiplicity_suspected", res.multiplicity_suspected},
               {"schedule", array3_json(res.schedule.tau)}};
    json trace = json::array();
    for (const auto& w : res.welfare_trace) trace.push_back({w[0], w[1]});
    out_j["welfare_trace"] = trace;
    out_j["provenance"] = provenance_json("nash", ga, sopts, extra);
    write_text(out, out_j.dump(2) + "\n");
    if (!res.converged) throw DomainError("best-response iteration did not converge");
    return 0;
}

int cmd_verify(const Engine& eng, const std::string& nash_path, const DeviationGrid& grid,
               const std::string& out, const std::string& format, const GAConfig& ga,
               const SolverOptions& sopts, const std::string& extra) {
    std::ifstream in(nash_path);
    if (!in) throw DomainError("cannot open " + nash_path);
    json j;
    in >> j;
    NashResult res;
    res.tau_i = j.at("tau_i").get<Candidate>();
    res.tau_j = j.at("tau_j").get<Candidate>();
    res.schedule.tau = array3_of(j.at("schedule"));
    const std::size_t i = j.at("i_index").get<std::size_t>();
    const std::size_t jj = j.at("j_index").get<std::size_t>();

    const DeviationReport rep = verify_no_deviation(eng.factory(), res, i, jj, ga, grid);
    if (pick_format(format, "csv") == "json") {
        json out_j{{"pass", rep.pass()},
                   {"max_improvement", rep.max_improvement},
                   {"worst_chooser", eng.model.countries[rep.worst_chooser]},
                   {"worst_sector", rep.worst_sector},
                   {"worst_tariff", rep.worst_tariff},
                   {"cells_checked", rep.cells_checked},
                   {"failures", rep.failures},
                   {"provenance", provenance_json("verify", ga, sopts, extra)}};
        write_text(out, out_j.dump(2) + "\n");
        return rep.pass() ? 0 : 1;
    }
    std::ostringstream os;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%d,%.17g,%s,%zu,%.17g,%d,%d", rep.pass() ? 1 : 0,
                  rep.max_improvement, eng.model.countries[rep.worst_chooser].c_str(),
                  rep.worst_sector, rep.worst_tariff, rep.cells_checked, rep.failures);
    os << provenance_csv("verify", ga, sopts, extra)
       << "pass,max_improvement,worst_chooser,worst_sector,worst_tariff,cells_checked,failures\n"
       << buf << '\n';
    write_text(out, os.str());
    return rep.pass() ? 0 : 1;
}

int cmd_cp_solve(const std::string& in_dir, const std::vector<double>& theta,
                 const std::string& tariff_path, const std::string& out,
                 const std::string& save_model_path, const std::string& format,
                 const GAConfig& ga, const SolverOptions& sopts) {
    const LoadResult lr = load_economy(EconomyPaths::in_dir(in_dir));
    for (const auto& w : lr.warnings) std::cerr << "warning: " << w << '\n';
    check_economy(lr.data);
    const CPModel cp = calibrate_cp(lr.data, theta);
    if (!save_model_path.empty()) {
        save_cp_model(cp, save_model_path);
        attach_provenance(save_model_path, provenance_json("cp-solve", ga, sopts, in_dir));
    }

    TariffSchedule tariffs = cp.baseline_tariffs;
    if (!tariff_path.empty()) {
        std::vector<std::string> warnings;
        tariffs = load_tariff_csv(tariff_path, cp.countries, cp.sectors, &warnings);
        for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    }
    const HatOutcome ho = solve_hat(cp, tariffs, sopts);
    if (!ho.ok()) throw DomainError("hat solve failed: " + ho.message);

    if (pick_format(format, "json") == "csv") {
        std::ostringstream os;
        os << provenance_csv("cp-solve", ga, sopts, in_dir + "|" + tariff_path)
           << "country,hat_w,hat_W,I_prime\n";
        char buf[128];
        for (std::size_t i = 0; i < cp.country_count(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g", ho.eq.hat_w[i], ho.eq.hat_W[i],
                          ho.eq.I_prime[i]);
            os << cp.countries[i] << ',' << buf << '\n';
        }
        write_text(out, os.str());
        return 0;
    }
    json j{{"countries", cp.countries},
           {"hat_w", ho.eq.hat_w},
           {"I_prime", ho.eq.I_prime},
           {"hat_W", ho.eq.hat_W}};
    json hp = json::array(), hw = json::array();
    for (std::size_t i = 0; i < cp.country_count(); ++i) {
        json row = json::array();
        for (std::size_t s = 0; s < cp.sector_count(); ++s) row.push_back(ho.eq.hat_p(i, s));
        hp.push_back(row);
    }
    j["hat_p"] = hp;
    j["provenance"] = provenance_json("cp-solve", ga, sopts, in_dir + "|" + tariff_path);
    write_text(out, j.dump(2) + "\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    GAConfig ga;
    ga.rng_seed = kDefaultSeed;
    SolverOptions sopts;

    // Config file first so flags can override its values.
    for (int k = 1; k < argc - 1; ++k)
        if (std::string(argv[k]) == "--config") {
            try {
                apply_config_file(argv[k + 1], ga, sopts);
            } catch (const std::exception& e) {
                std::cerr << "error: " << e.what() << '\n';
                return 1;
            }
        }

    CLI::App app{"Trade-model calibration, counterfactuals, and tariff games"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    std::string config_path;
    app.add_option("--config", config_path, "flat key = value config file")->expected(1);

    bool seed_given = false;
    std::string out_format;  // empty = the command's native format
    auto add_format = [&](CLI::App* sub) {
        sub->add_option("--format", out_format, "report format: json | csv")
            ->check(CLI::IsMember({"json", "csv"}));
    };
    auto add_common = [&](CLI::App* sub, bool randomized) {
        sub->add_option("--threads", ga.threads, "worker threads (0 = all cores)");
        sub->add_option("--config", config_path, "flat key = value config file");
        if (randomized) {
            sub->add_option_function<std::uint64_t>(
                "--rng-seed",
                [&](std::uint64_t v) {
                    ga.rng_seed = v;
                    seed_given = true;
                },
                "seed for all stochastic search phases");
            sub->add_option("--cap", ga.upper, "tariff cap (gross factor)");
        }
    };

    // imbalance
    auto* c_imb = app.add_subcommand("imbalance", "panel imbalance indices");
    std::string imb_flows, imb_gdp, imb_out = "-";
    c_imb->add_option("--flows", imb_flows, "panel CSV: importer,exporter,year,value")->required();
    c_imb->add_option("--gdp", imb_gdp, "GDP CSV: country,year,gdp")->required();
    c_imb->add_option("--out", imb_out, "output CSV ('-' = stdout)");
    add_format(c_imb);
    add_common(c_imb, false);

    // scenario
    auto* c_scn = app.add_subcommand("scenario", "synthetic economy bundle");
    ScenarioSpec spec;
    double scn_deficit = 0.0;
    std::string scn_mode = "two-country", scn_out;
    std::size_t scn_i = 0, scn_j = 1, scn_third = 2;
    c_scn->add_option("--countries", spec.n_countries, "number of countries");
    c_scn->add_option("--sectors", spec.n_goods_sectors, "number of goods sectors");
    c_scn->add_flag("--services", spec.include_services, "append an untaxable service sector");
    c_scn->add_flag("--io", spec.include_io, "include intermediate input usage");
    c_scn->add_option("--base", spec.expenditure_base, "per-country expenditure");
    c_scn->add_option("--elasticity", spec.elasticity, "common substitution elasticity");
    c_scn->add_option("--io-intensity", spec.io_intensity, "intermediate share of gross output");
    c_scn->add_option("--deficit", scn_deficit, "bilateral deficit injected for the pair");
    c_scn->add_option("--deficit-mode", scn_mode, "two-country | balanced")
        ->check(CLI::IsMember({"two-country", "balanced"}));
    c_scn->add_option("--pair-i", scn_i, "deficit country index");
    c_scn->add_option("--pair-j", scn_j, "surplus country index");
    c_scn->add_option("--third", scn_third, "offset country (balanced mode)");
    c_scn->add_option("--out", scn_out, "output directory")->required();
    add_common(c_scn, false);

    // calibrate
    auto* c_cal = app.add_subcommand("calibrate", "fit model parameters to a bundle");
    std::string cal_in, cal_mode = "preferences", cal_out;
    c_cal->add_option("--in", cal_in, "input bundle directory")->required();
    c_cal->add_option("--mode", cal_mode, "preferences | iceberg")
        ->check(CLI::IsMember({"preferences", "iceberg"}));
    c_cal->add_option("--out", cal_out, "model JSON")->required();
    add_common(c_cal, false);

    // solve
    auto* c_sol = app.add_subcommand("solve", "counterfactual equilibrium");
    std::string sol_model, sol_tariffs, sol_eq, sol_welfare = "-";
    c_sol->add_option("--model", sol_model, "model JSON")->required();
    c_sol->add_option("--tariffs", sol_tariffs, "tariff CSV (default: baseline)");
    c_sol->add_option("--out", sol_eq, "equilibrium JSON");
    c_sol->add_option("--welfare", sol_welfare, "welfare CSV ('-' = stdout)");
    add_format(c_sol);
    add_common(c_sol, false);

    // elasticity
    auto* c_ela = app.add_subcommand("elasticity", "numerical demand elasticity of one cell");
    std::string ela_model, ela_i, ela_j, ela_s, ela_out = "-";
    c_ela->add_option("--model", ela_model, "model JSON")->required();
    c_ela->add_option("--importer", ela_i)->required();
    c_ela->add_option("--exporter", ela_j)->required();
    c_ela->add_option("--sector", ela_s)->required();
    c_ela->add_option("--out", ela_out, "output CSV ('-' = stdout)");
    add_format(c_ela);
    add_common(c_ela, false);

    // toy
    auto* c_toy = app.add_subcommand("toy", "two-country endowment model");
    ToyParams tp;
    std::string toy_sweep, toy_out = "-";
    double toy_from = 0.0, toy_to = 0.5, toy_grid_lo = 0.0, toy_grid_hi = 2.0,
           toy_grid_step = 1e-3;
    int toy_steps = 11;
    c_toy->add_option("--E1", tp.E1);
    c_toy->add_option("--E2", tp.E2);
    c_toy->add_option("--sigma1", tp.sigma1);
    c_toy->add_option("--sigma2", tp.sigma2);
    c_toy->add_option("--tau1", tp.tau1, "net tariff rate of country 1");
    c_toy->add_option("--tau2", tp.tau2, "net tariff rate of country 2");
    c_toy->add_option("--d", tp.d, "country 1 trade deficit in good-1 units");
    c_toy->add_option("--sweep", toy_sweep, "d | tau2: sweep and report optimal tariffs");
    c_toy->add_option("--sweep-from", toy_from);
    c_toy->add_option("--sweep-to", toy_to);
    c_toy->add_option("--sweep-steps", toy_steps);
    c_toy->add_option("--grid-lo", toy_grid_lo, "tariff grid lower bound (net rate)");
    c_toy->add_option("--grid-hi", toy_grid_hi, "tariff grid upper bound (net rate)");
    c_toy->add_option("--grid-step", toy_grid_step);
    c_toy->add_option("--out", toy_out, "output ('-' = stdout)");
    add_format(c_toy);
    add_common(c_toy, false);

    // shared engine flags
    std::string engine = "armington", eng_model, eng_economy;
    std::vector<double> eng_theta;
    bool participation = false;
    auto add_engine = [&](CLI::App* sub) {
        sub->add_option("--engine", engine, "armington | cp")
            ->check(CLI::IsMember({"armington", "cp"}));
        sub->add_option("--model", eng_model, "model JSON (armington engine)");
        sub->add_option("--economy", eng_economy, "bundle directory (cp engine)");
        sub->add_option("--theta", eng_theta, "per-sector trade elasticities (cp engine)");
        sub->add_flag("--participation-constraint", participation,
                      "cap fitness at autarky when the partner would rather exit");
    };

    // best-response
    auto* c_br = app.add_subcommand("best-response", "optimal unilateral tariffs");
    std::string br_chooser, br_partner, br_seed_file, br_out = "-", br_trace;
    bool br_uniform = false;
    c_br->add_option("--chooser", br_chooser)->required();
    c_br->add_option("--partner", br_partner)->required();
    c_br->add_flag("--uniform", br_uniform, "one shared rate across sectors");
    c_br->add_option("--seed-file", br_seed_file, "extra start candidates, comma-separated rows");
    c_br->add_option("--out", br_out, "result JSON ('-' = stdout)");
    c_br->add_option("--trace", br_trace, "per-generation trace CSV");
    add_format(c_br);
    add_engine(c_br);
    add_common(c_br, true);

    // nash
    auto* c_nash = app.add_subcommand("nash", "alternating best-response equilibrium");
    std::string nash_i, nash_j, nash_out = "-";
    NashOptions nopts;
    bool nash_mult = false;
    c_nash->add_option("--i", nash_i, "first mover")->required();
    c_nash->add_option("--j", nash_j, "second mover")->required();
    c_nash->add_option("--tol", nopts.tol, "convergence tolerance");
    c_nash->add_option("--max-rounds", nopts.max_rounds);
    c_nash->add_flag("--multiplicity-check", nash_mult, "re-run from jittered seeds");
    c_nash->add_option("--out", nash_out, "result JSON ('-' = stdout)");
    add_format(c_nash);
    add_engine(c_nash);
    add_common(c_nash, true);

    // verify
    auto* c_ver = app.add_subcommand("verify", "no-deviation sweep of a nash result");
    std::string ver_nash, ver_out = "-";
    DeviationGrid grid;
    c_ver->add_option("--nash", ver_nash, "nash result JSON")->required();
    c_ver->add_option("--fine-max", grid.fine_max);
    c_ver->add_option("--fine-step", grid.fine_step);
    c_ver->add_option("--tail-step", grid.tail_step);
    c_ver->add_option("--out", ver_out, "report CSV ('-' = stdout)");
    add_format(c_ver);
    add_engine(c_ver);
    add_common(c_ver, true);

    // cp-solve
    auto* c_cp = app.add_subcommand("cp-solve", "hat-algebra counterfactual");
    std::string cp_in, cp_tariffs, cp_out = "-", cp_save;
    std::vector<double> cp_theta;
    c_cp->add_option("--in", cp_in, "bundle directory")->required();
    c_cp->add_option("--theta", cp_theta, "per-sector trade elasticities")->required();
    c_cp->add_option("--tariffs", cp_tariffs, "tariff CSV (default: baseline)");
    c_cp->add_option("--out", cp_out, "result JSON ('-' = stdout)");
    c_cp->add_option("--save-model", cp_save, "also write the fitted model JSON");
    add_format(c_cp);
    add_common(c_cp, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        ga.check();
        if (c_imb->parsed())
            return cmd_imbalance(imb_flows, imb_gdp, imb_out, out_format, ga, sopts);
        if (c_scn->parsed())
            return cmd_scenario(spec, scn_deficit, scn_mode, scn_i, scn_j, scn_third, scn_out, ga,
                                sopts);
        if (c_cal->parsed()) return cmd_calibrate(cal_in, cal_mode, cal_out, ga, sopts);
        if (c_sol->parsed())
            return cmd_solve(sol_model, sol_tariffs, sol_eq, sol_welfare, out_format, ga, sopts);
        if (c_ela->parsed())
            return cmd_elasticity(ela_model, ela_i, ela_j, ela_s, ela_out, out_format, ga, sopts);
        if (c_toy->parsed())
            return cmd_toy(tp, toy_sweep, toy_from, toy_to, toy_steps, toy_grid_lo, toy_grid_hi,
                           toy_grid_step, toy_out, out_format, ga, sopts);

        if (c_br->parsed() || c_nash->parsed() || c_ver->parsed()) {
            if (!seed_given)
                std::cerr << "note: no --rng-seed given; using fixed default " << ga.rng_seed
                          << '\n';
            const Engine eng =
                load_engine(engine, eng_model, eng_economy, eng_theta, participation, sopts);
            std::ostringstream extra;
            extra << engine << '|' << eng_model << '|' << eng_economy << '|' << participation;
            if (c_br->parsed()) {
                extra << '|' << br_chooser << '|' << br_partner << '|' << br_uniform;
                return cmd_best_response(eng, br_chooser, br_partner, br_uniform, br_seed_file,
                                         br_out, br_trace, out_format, ga, sopts, extra.str());
            }
            if (c_nash->parsed()) {
                nopts.multiplicity_check = nash_mult;
                extra << '|' << nash_i << '|' << nash_j << '|' << nopts.tol << '|'
                      << nopts.max_rounds;
                return cmd_nash(eng, nash_i, nash_j, nopts, nash_out, out_format, ga, sopts,
                                extra.str());
            }
            extra << '|' << ver_nash << '|' << grid.fine_max << '|' << grid.fine_step << '|'
                  << grid.tail_step;
            return cmd_verify(eng, ver_nash, grid, ver_out, out_format, ga, sopts, extra.str());
        }
        if (c_cp->parsed())
            return cmd_cp_solve(cp_in, cp_theta, cp_tariffs, cp_out, cp_save, out_format, ga,
                                sopts);
        std::cerr << "error: no subcommand\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
