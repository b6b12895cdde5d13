#include "tradewar/nash.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

namespace tradewar {

namespace {

Candidate extract(const TariffSchedule& sched, std::size_t importer, std::size_t exporter,
                  const std::vector<std::size_t>& sectors, const GAConfig& cfg) {
    Candidate c(sectors.size());
    for (std::size_t k = 0; k < sectors.size(); ++k)
        c[k] = quantize(std::clamp(sched.tau(importer, exporter, sectors[k]), cfg.lower, cfg.upper),
                        cfg);
    return c;
}

void apply(TariffSchedule& sched, std::size_t importer, std::size_t exporter,
           const std::vector<std::size_t>& sectors, const Candidate& c) {
    for (std::size_t k = 0; k < sectors.size(); ++k)
        sched.tau(importer, exporter, sectors[k]) = c[k];
}

double sup_diff(const Candidate& a, const Candidate& b) {
    double d = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
    return d;
}

NashResult run_rounds(const CalibratedModel& model, std::size_t i, std::size_t j,
                      const GAConfig& cfg, const EvaluatorFactory& factory,
                      const NashOptions& opts, const std::vector<Candidate>& extra_seeds_i,
                      const std::vector<Candidate>& extra_seeds_j) {
    const std::vector<std::size_t> sectors = taxable_sectors(model.sectors);
    NashResult res;
    res.schedule = model.baseline_tariffs;
    res.tau_i = extract(res.schedule, i, j, sectors, cfg);
    res.tau_j = extract(res.schedule, j, i, sectors, cfg);
    res.welfare_i = res.welfare_j = 0.0;

    const std::size_t first = opts.i_moves_first ? i : j;
    for (int round = 1; round <= opts.max_rounds; ++round) {
        const Candidate prev_i = res.tau_i, prev_j = res.tau_j;
        const double prev_wi = res.welfare_i, prev_wj = res.welfare_j;

        for (int half = 0; half < 2; ++half) {
            const bool moving_i = (half == 0) == (first == i);
            const std::size_t chooser = moving_i ? i : j;
            const std::size_t partner = moving_i ? j : i;
            Candidate& mine = moving_i ? res.tau_i : res.tau_j;

            std::vector<Candidate> seeds{mine};
            const auto& extra = moving_i ? extra_seeds_i : extra_seeds_j;
            seeds.insert(seeds.end(), extra.begin(), extra.end());

            const auto eval = factory(chooser, partner, res.schedule);
            const BestResponse br = optimize(*eval, cfg, seeds);
            mine = br.tau;
            (moving_i ? res.welfare_i : res.welfare_j) = br.welfare;
            apply(res.schedule, chooser, partner, sectors, mine);
        }

        res.rounds = round;
        res.welfare_trace.push_back({res.welfare_i, res.welfare_j});
        const double dtau = std::max(sup_diff(res.tau_i, prev_i), sup_diff(res.tau_j, prev_j));
        const double dw = std::max(std::abs(res.welfare_i - prev_wi),
                                   std::abs(res.welfare_j - prev_wj));
        if (round > 1 && std::max(dtau, dw) < opts.tol) {
            res.converged = true;
            break;
        }
    }
    return res;
}

}  // namespace

EvaluatorFactory armington_factory(const CalibratedModel& model, bool participation_constraint,
                                   SolverOptions solver_opts) {
    return [&model, participation_constraint, solver_opts](
               std::size_t chooser, std::size_t partner,
               const TariffSchedule& current) -> std::unique_ptr<WelfareEvaluator> {
        return std::make_unique<ArmingtonEvaluator>(model, chooser, partner, current,
                                                    participation_constraint, solver_opts);
    };
}

NashResult nash(const CalibratedModel& model, std::size_t i, std::size_t j, const GAConfig& cfg,
                const EvaluatorFactory& factory, const NashOptions& opts) {
    cfg.check();
    NashResult res = run_rounds(model, i, j, cfg, factory, opts, {}, {});

    if (opts.multiplicity_check && res.converged) {
        // Restart from deterministically jittered seeds; disagreement between
        // converged runs flags possible equilibrium multiplicity.
        std::mt19937_64 rng(cfg.rng_seed ^ 0x9e3779b97f4a7c15ULL);
        auto jitter = [&](const Candidate& c) {
            Candidate out = c;
            for (double& x : out) {
                const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
                x = quantize(std::clamp(x + (u - 0.5) * 0.2, cfg.lower, cfg.upper), cfg);
            }
            return out;
        };
        for (int rerun = 0; rerun < 2; ++rerun) {
            const NashResult alt = run_rounds(model, i, j, cfg, factory, opts,
                                              {jitter(res.tau_i)}, {jitter(res.tau_j)});
            if (!alt.converged || sup_diff(alt.tau_i, res.tau_i) > opts.tol ||
                sup_diff(alt.tau_j, res.tau_j) > opts.tol) {
                res.multiplicity_suspected = true;
                break;
            }
        }
    }
    return res;
}

DeviationReport verify_no_deviation(const EvaluatorFactory& factory, const NashResult& nash_eq,
                                    std::size_t i, std::size_t j, const GAConfig& cfg,
                                    const DeviationGrid& grid) {
    DeviationReport rep;

    std::vector<double> levels;
    for (double g = 1.0; g <= grid.fine_max + 1e-12; g += grid.fine_step)
        levels.push_back(quantize(g, cfg));
    for (double g = grid.fine_max + grid.tail_step; g <= cfg.upper + 1e-12; g += grid.tail_step)
        levels.push_back(quantize(g, cfg));

    for (int side = 0; side < 2; ++side) {
        const std::size_t chooser = side == 0 ? i : j;
        const std::size_t partner = side == 0 ? j : i;
        const Candidate& base = side == 0 ? nash_eq.tau_i : nash_eq.tau_j;
        const auto eval = factory(chooser, partner, nash_eq.schedule);

        const auto w0 = eval->evaluate(base);
        if (!w0) {
            ++rep.failures;
            continue;
        }

        struct Cell {
            std::size_t sector;
            double tariff;
        };
        std::vector<Cell> cells;
        for (std::size_t k = 0; k < base.size(); ++k)
            for (double g : levels)
                if (g != base[k]) cells.push_back({k, g});

        std::vector<double> improvement(cells.size(), 0.0);
        std::vector<char> failed(cells.size(), 0);
        unsigned workers = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads)
                                           : std::max(1u, std::thread::hardware_concurrency());
        workers = std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(1, cells.size())));
        auto work = [&](unsigned id) {
            for (std::size_t k = id; k < cells.size(); k += workers) {
                Candidate c = base;
                c[cells[k].sector] = cells[k].tariff;
                const auto w = eval->evaluate(c);
                if (!w)
                    failed[k] = 1;
                else
                    improvement[k] = *w - *w0;
            }
        };
        if (workers <= 1) {
            work(0);
        } else {
            std::vector<std::thread> pool;
            for (unsigned id = 0; id < workers; ++id) pool.emplace_back(work, id);
            for (auto& t : pool) t.join();
        }

        for (std::size_t k = 0; k < cells.size(); ++k) {
            ++rep.cells_checked;
            if (failed[k]) {
                ++rep.failures;
                continue;
            }
            if (improvement[k] > rep.max_improvement) {
                rep.max_improvement = improvement[k];
                rep.worst_chooser = chooser;
                rep.worst_sector = cells[k].sector;
                rep.worst_tariff = cells[k].tariff;
            }
        }
    }
    return rep;
}

}  // namespace tradewar
