#include "tradewar/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

namespace tradewar {

namespace {

// Uniform in [0,1) built from the raw 64-bit stream; identical across
// platforms, unlike std::uniform_real_distribution.
double uniform01(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

constexpr double kFailedFitness = -std::numeric_limits<double>::infinity();

struct EvalCache {
    std::map<Candidate, double> memo;  // failed solves stored as -inf
    int failures = 0;
};

// Evaluates a population; the random stream is never touched here, and results
// land in pre-assigned slots, so worker count cannot affect the outcome.
std::vector<double> evaluate_population(const WelfareEvaluator& eval, const GAConfig& cfg,
                                        const std::vector<Candidate>& pop, EvalCache& cache) {
    std::vector<Candidate> pending;
    for (const auto& c : pop)
        if (!cache.memo.count(c)) {
            cache.memo.emplace(c, kFailedFitness);  // placeholder, filled below
            pending.push_back(c);
        }

    std::vector<double> results(pending.size(), kFailedFitness);
    unsigned workers = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads)
                                       : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(1, pending.size())));
    auto work = [&](unsigned id) {
        for (std::size_t k = id; k < pending.size(); k += workers) {
            const auto w = eval.evaluate(pending[k]);
            if (w) results[k] = *w;
        }
    };
    if (workers <= 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned id = 0; id < workers; ++id) pool.emplace_back(work, id);
        for (auto& t : pool) t.join();
    }
    for (std::size_t k = 0; k < pending.size(); ++k) {
        cache.memo[pending[k]] = results[k];
        if (results[k] == kFailedFitness) ++cache.failures;
    }

    std::vector<double> fitness(pop.size());
    for (std::size_t k = 0; k < pop.size(); ++k) fitness[k] = cache.memo.at(pop[k]);
    return fitness;
}

// Indices ordered best-first; ties and failures break toward lower index.
std::vector<std::size_t> rank_population(const std::vector<double>& fitness) {
    std::vector<std::size_t> order(fitness.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fitness[a] > fitness[b]; });
    return order;
}

// Roulette wheel over rank-scaled fitness 1/sqrt(rank).
class Roulette {
public:
    explicit Roulette(std::size_t n) : cum_(n) {
        double acc = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            acc += 1.0 / std::sqrt(static_cast<double>(r + 1));
            cum_[r] = acc;
        }
    }
    // returns a position in the ranking (0 = best)
    std::size_t spin(std::mt19937_64& g) const {
        const double x = uniform01(g) * cum_.back();
        const auto it = std::lower_bound(cum_.begin(), cum_.end(), x);
        return std::min<std::size_t>(static_cast<std::size_t>(it - cum_.begin()),
                                     cum_.size() - 1);
    }

private:
    std::vector<double> cum_;
};

struct GARun {
    Candidate best;
    double best_welfare = kFailedFitness;
    int generations = 0;
    std::vector<Candidate> final_ranked;  // population of the last generation, best first
    std::vector<TraceRow> trace;
};

std::vector<Candidate> initial_population(const WelfareEvaluator& eval, const GAConfig& cfg,
                                          const std::vector<Candidate>& seeds,
                                          std::mt19937_64& rng) {
    const std::size_t dim = eval.dimension();
    const std::size_t P = static_cast<std::size_t>(cfg.population);
    const std::size_t half = P / 2;
    std::vector<Candidate> pop;
    for (const auto& s : seeds) {
        if (pop.size() >= half) break;
        if (s.size() != dim) throw std::runtime_error("seed dimension mismatch");
        Candidate c(dim);
        for (std::size_t k = 0; k < dim; ++k) c[k] = quantize(s[k], cfg);
        pop.push_back(std::move(c));
    }
    while (pop.size() < half) {
        Candidate c(dim);
        for (std::size_t k = 0; k < dim; ++k)
            c[k] = quantize(cfg.lower + uniform01(rng) * (cfg.upper - cfg.lower), cfg);
        pop.push_back(std::move(c));
    }
    // Opposites mirror the first half through the centre of the bounds.
    for (std::size_t m = 0; m < P - half; ++m) {
        Candidate c(dim);
        for (std::size_t k = 0; k < dim; ++k)
            c[k] = quantize(cfg.lower + cfg.upper - pop[m % half][k], cfg);
        pop.push_back(std::move(c));
    }
    return pop;
}

GARun run_ga(const WelfareEvaluator& eval, const GAConfig& cfg, std::vector<Candidate> pop,
             int stall_limit, int generation_limit, EvalCache& cache, std::mt19937_64& rng) {
    const std::size_t dim = eval.dimension();
    const std::size_t P = static_cast<std::size_t>(cfg.population);
    GARun run;

    std::vector<double> fitness = evaluate_population(eval, cfg, pop, cache);
    std::vector<std::size_t> order = rank_population(fitness);
    if (fitness[order[0]] == kFailedFitness)
        throw std::runtime_error("every candidate in the population failed to solve");
    run.best = pop[order[0]];
    run.best_welfare = fitness[order[0]];

    std::vector<double> deltas;  // |best improvement|, newest first
    int stall = 0;
    const Roulette wheel(P);

    for (int gen = 1; gen <= generation_limit; ++gen) {
        std::vector<Candidate> next;
        next.reserve(P);
        for (int e = 0; e < cfg.elites; ++e) next.push_back(pop[order[static_cast<std::size_t>(e)]]);

        for (int c = 0; c < cfg.crossover; ++c) {
            const Candidate& p1 = pop[order[wheel.spin(rng)]];
            const Candidate& p2 = pop[order[wheel.spin(rng)]];
            Candidate child(dim);
            for (std::size_t k = 0; k < dim; ++k) {
                double value = p1[k];
                bool in_bounds = false;
                for (int attempt = 0; attempt < 100 && !in_bounds; ++attempt) {
                    double u = uniform01(rng) - 0.5;
                    while (u == -0.5 || u == 0.5) u = uniform01(rng) - 0.5;
                    const double lam = laplace_draw(u, cfg.laplace_b);
                    value = p1[k] + lam * std::abs(p1[k] - p2[k]);
                    in_bounds = value >= cfg.lower && value <= cfg.upper;
                }
                child[k] = quantize(std::clamp(value, cfg.lower, cfg.upper), cfg);
            }
            next.push_back(std::move(child));
        }

        for (int m = 0; m < cfg.mutation; ++m) {
            const std::size_t pos = wheel.spin(rng);
            const bool above_median = pos < P / 2;
            const Candidate& parent = pop[order[pos]];
            std::vector<double> u_step(dim), u_dir(dim);
            for (std::size_t k = 0; k < dim; ++k) u_step[k] = uniform01(rng);
            for (std::size_t k = 0; k < dim; ++k) u_dir[k] = uniform01(rng);
            next.push_back(power_mutation(parent, above_median, u_step, u_dir, cfg));
        }

        pop = std::move(next);
        fitness = evaluate_population(eval, cfg, pop, cache);
        order = rank_population(fitness);
        run.generations = gen;

        const double best_now = fitness[order[0]];
        deltas.insert(deltas.begin(), std::abs(best_now - run.best_welfare));
        if (best_now > run.best_welfare) {
            run.best_welfare = best_now;
            run.best = pop[order[0]];
        }
        const double grad = stall_metric(deltas);
        if (grad < cfg.stall_tol)
            ++stall;
        else
            stall = 0;
        run.trace.push_back({gen, run.best_welfare, grad, stall});
        if (stall >= stall_limit) break;
    }

    run.final_ranked.reserve(P);
    for (std::size_t k = 0; k < P; ++k) run.final_ranked.push_back(pop[order[k]]);
    return run;
}

// Compass search on the discretization lattice; feasible throughout and never
// returns a worse point than it started from.
std::pair<Candidate, double> refine(const WelfareEvaluator& eval, const GAConfig& cfg,
                                    Candidate x, EvalCache& cache) {
    const std::size_t dim = x.size();
    auto value = [&](const Candidate& c) {
        const auto it = cache.memo.find(c);
        if (it != cache.memo.end()) return it->second;
        const auto w = eval.evaluate(c);
        const double f = w ? *w : kFailedFitness;
        cache.memo.emplace(c, f);
        if (!w) ++cache.failures;
        return f;
    };
    double fx = value(x);
    if (fx == kFailedFitness) return {x, fx};

    double step = cfg.quantum * 1024.0;
    int budget = 20000;
    while (step >= cfg.quantum && budget > 0) {
        bool improved = false;
        for (std::size_t k = 0; k < dim && budget > 0; ++k) {
            for (const double sgn : {+1.0, -1.0}) {
                Candidate y = x;
                y[k] = quantize(y[k] + sgn * step, cfg);
                if (y[k] < cfg.lower || y[k] > cfg.upper || y[k] == x[k]) continue;
                --budget;
                const double fy = value(y);
                if (fy > fx) {
                    x = std::move(y);
                    fx = fy;
                    improved = true;
                    break;
                }
            }
        }
        if (!improved) step *= 0.5;
    }
    return {x, fx};
}

}  // namespace

void GAConfig::check() const {
    if (elites + crossover + mutation != population)
        throw std::runtime_error("population must equal elites + crossover + mutation");
    if (elites <= 0 || crossover <= 0 || mutation <= 0)
        throw std::runtime_error("all GA group sizes must be positive");
    if (!(lower >= 1.0) || !(upper > lower)) throw std::runtime_error("bad tariff bounds");
    if (quantum <= 0.0) throw std::runtime_error("bad discretization quantum");
}

double quantize(double x, const GAConfig& cfg) {
    return std::round(x / cfg.quantum) * cfg.quantum;
}

double laplace_draw(double u, double b) {
    return (u >= 0.0 ? -1.0 : 1.0) * b * std::log(1.0 - 2.0 * std::abs(u));
}

Candidate laplace_crossover(const Candidate& p1, const Candidate& p2,
                            const std::vector<double>& lambdas, const GAConfig& cfg) {
    if (p1.size() != p2.size() || p1.size() != lambdas.size())
        throw std::runtime_error("crossover dimension mismatch");
    Candidate child(p1.size());
    for (std::size_t k = 0; k < p1.size(); ++k) {
        const double v = p1[k] + lambdas[k] * std::abs(p1[k] - p2[k]);
        child[k] = quantize(std::clamp(v, cfg.lower, cfg.upper), cfg);
    }
    return child;
}

Candidate power_mutation(const Candidate& parent, bool above_median,
                         const std::vector<double>& u_step, const std::vector<double>& u_dir,
                         const GAConfig& cfg) {
    if (parent.size() != u_step.size() || parent.size() != u_dir.size())
        throw std::runtime_error("mutation dimension mismatch");
    const double power = above_median ? cfg.power_top : cfg.power_bottom;
    Candidate child(parent.size());
    for (std::size_t k = 0; k < parent.size(); ++k) {
        const double delta = std::pow(u_step[k], power);
        const double span = cfg.upper - cfg.lower;
        const double toward_lower =
            std::clamp((parent[k] - cfg.lower) / span, cfg.direction_clamp_lo,
                       cfg.direction_clamp_hi);
        double v;
        if (u_dir[k] < toward_lower)
            v = parent[k] - delta * (parent[k] - cfg.lower);
        else
            v = parent[k] + delta * (cfg.upper - parent[k]);
        child[k] = quantize(std::clamp(v, cfg.lower, cfg.upper), cfg);
    }
    return child;
}

double stall_metric(const std::vector<double>& best_history) {
    if (best_history.empty()) return 0.0;
    const double eps = std::numeric_limits<double>::epsilon();
    double wsum = 0.0, acc = 0.0, w = 1.0;
    for (double d : best_history) {
        acc += w * std::log(std::max(std::abs(d), eps));
        wsum += w;
        w *= 0.5;
    }
    return std::exp(acc / wsum);
}

ArmingtonEvaluator::ArmingtonEvaluator(const CalibratedModel& model, std::size_t chooser,
                                       std::size_t partner, TariffSchedule base,
                                       bool participation_constraint, SolverOptions solver_opts)
    : model_(model),
      chooser_(chooser),
      partner_(partner),
      base_(std::move(base)),
      participation_(participation_constraint),
      sopts_(std::move(solver_opts)) {
    if (chooser_ == partner_ || chooser_ >= model.country_count() ||
        partner_ >= model.country_count())
        throw std::runtime_error("bad chooser/partner pair");
    sectors_ = taxable_sectors(model.sectors);
    if (sectors_.empty()) throw std::runtime_error("no taxable sectors");

    if (participation_) {
        if (model.country_count() != 2)
            throw std::runtime_error("participation constraint requires a 2-country model");
        const SolveOutcome aut = autarky_equilibrium(model_, chooser_, partner_, sopts_);
        if (!aut.ok()) throw std::runtime_error("autarky solve failed: " + aut.message);
        const CalibratedModel am = autarky_model(model_, chooser_, partner_);
        const std::vector<double> waut = welfare_levels(am, aut.eq);
        autarky_chooser_ = waut[chooser_];
        autarky_partner_ = waut[partner_];

        // The exercise is only meaningful where both sides gain from trade.
        TariffSchedule free = TariffSchedule::ones(2, model.sector_count());
        const SolveOutcome ft = solve_counterfactual(model_, free, sopts_);
        if (!ft.ok()) throw std::runtime_error("free-trade solve failed: " + ft.message);
        const std::vector<double> wft = welfare_levels(model_, ft.eq);
        if (wft[chooser_] < autarky_chooser_ || wft[partner_] < autarky_partner_)
            throw std::runtime_error(
                "transfer too large: a country prefers autarky to free trade");
    }
}

TariffSchedule ArmingtonEvaluator::schedule_for(const Candidate& tau) const {
    TariffSchedule sched = base_;
    for (std::size_t k = 0; k < sectors_.size(); ++k)
        sched.tau(chooser_, partner_, sectors_[k]) = tau[k];
    return sched;
}

std::optional<double> ArmingtonEvaluator::evaluate(const Candidate& tau) const {
    if (tau.size() != sectors_.size()) throw std::runtime_error("candidate dimension mismatch");
    const SolveOutcome sol = solve_counterfactual(model_, schedule_for(tau), sopts_);
    if (!sol.ok()) return std::nullopt;
    const std::vector<double> W = welfare_levels(model_, sol.eq);
    if (participation_ && W[partner_] < autarky_partner_) return autarky_chooser_;
    return W[chooser_];
}

BestResponse optimize(const WelfareEvaluator& eval, const GAConfig& cfg,
                      const std::vector<Candidate>& seeds) {
    cfg.check();
    std::mt19937_64 rng(cfg.rng_seed);
    EvalCache cache;
    BestResponse out;

    GARun run = run_ga(eval, cfg, initial_population(eval, cfg, seeds, rng), cfg.stall_limit,
                       cfg.generation_limit, cache, rng);
    out.trace = run.trace;
    Candidate best = run.best;
    double best_w = run.best_welfare;
    out.generations = run.generations;

    for (int round = 0; round < cfg.outer_rounds; ++round) {
        // Polish the elite set on the lattice, then restart the GA from it.
        std::vector<Candidate> reseed;
        for (int e = 0; e < cfg.elites && e < static_cast<int>(run.final_ranked.size()); ++e) {
            auto [pt, fv] = refine(eval, cfg, run.final_ranked[static_cast<std::size_t>(e)], cache);
            reseed.push_back(pt);
            if (fv > best_w) {
                best_w = fv;
                best = pt;
            }
        }
        reseed.insert(reseed.begin(), best);

        run = run_ga(eval, cfg, initial_population(eval, cfg, reseed, rng),
                     cfg.hybrid_stall_limit, cfg.hybrid_generation_limit, cache, rng);
        for (auto& row : run.trace) {
            row.generation += out.generations;
            out.trace.push_back(row);
        }
        out.generations += run.generations;

        double dtau = 0.0;
        for (std::size_t k = 0; k < best.size(); ++k)
            dtau = std::max(dtau, std::abs(run.best[k] - best[k]));
        const double dW = std::abs(run.best_welfare - best_w);
        if (run.best_welfare > best_w) {
            best_w = run.best_welfare;
            best = run.best;
        }
        if (std::max(dtau, dW) < cfg.outer_tol) break;
    }

    out.tau = best;
    out.welfare = best_w;
    out.failed_evaluations = cache.failures;
    return out;
}

BestResponse best_response(const CalibratedModel& model, std::size_t chooser, std::size_t partner,
                           const TariffSchedule& base, const GAConfig& cfg,
                           const std::vector<Candidate>& seeds, bool participation_constraint) {
    const ArmingtonEvaluator eval(model, chooser, partner, base, participation_constraint);
    return optimize(eval, cfg, seeds);
}

BestResponse uniform_best_response(const CalibratedModel& model, std::size_t chooser,
                                   std::size_t partner, const TariffSchedule& base,
                                   const GAConfig& cfg) {
    const ArmingtonEvaluator inner(model, chooser, partner, base);
    const UniformEvaluator eval(inner);
    BestResponse res = optimize(eval, cfg);
    // Report the expanded per-sector vector for uniform runs.
    res.tau = Candidate(inner.dimension(), res.tau.at(0));
    return res;
}

}  // namespace tradewar
