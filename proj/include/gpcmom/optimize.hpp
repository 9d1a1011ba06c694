#pragma once

#include <algorithm>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

namespace gpcmom {

/// Seedable box-constrained population maximizer (differential evolution,
/// rand/1/bin). Candidate evaluation is a pure map, so running it across
/// workers cannot change the result.
struct DeConfig {
    int population = 50;
    int generations = 60;
    unsigned seed = 1;
    double weight = 0.7;     // differential weight F
    double crossover = 0.9;  // crossover rate CR
    int workers = 1;
};

struct DeResult {
    std::vector<double> best;
    double best_value = 0.0;
    std::vector<double> best_so_far;  // one entry per generation incl. the initial one
    bool converged = true;            // false when the budget ended the search
    long long evaluations = 0;
};

inline DeResult de_maximize(const std::function<double(std::span<const double>)>& objective,
                            std::span<const double> lower, std::span<const double> upper,
                            const DeConfig& cfg = {}) {
    const int dim = static_cast<int>(lower.size());
    if (dim == 0 || upper.size() != lower.size())
        throw std::invalid_argument("bounds must be non-empty and of equal length");
    for (int j = 0; j < dim; ++j)
        if (!(lower[j] < upper[j])) throw std::invalid_argument("bounds must satisfy lower < upper");
    if (cfg.population < 4) throw std::invalid_argument("population must be >= 4");

    std::mt19937 rng(cfg.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int np = cfg.population;

    std::vector<std::vector<double>> pop(np, std::vector<double>(dim));
    for (auto& member : pop)
        for (int j = 0; j < dim; ++j) member[j] = lower[j] + unit(rng) * (upper[j] - lower[j]);

    DeResult result;
    auto evaluate_all = [&](const std::vector<std::vector<double>>& xs) {
        std::vector<double> values(xs.size());
        const int workers = std::max(1, cfg.workers);
        if (workers == 1) {
            for (std::size_t i = 0; i < xs.size(); ++i) values[i] = objective(xs[i]);
        } else {
            std::vector<std::thread> pool;
            for (int w = 0; w < workers; ++w)
                pool.emplace_back([&, w] {
                    for (std::size_t i = w; i < xs.size(); i += workers) values[i] = objective(xs[i]);
                });
            for (auto& th : pool) th.join();
        }
        result.evaluations += static_cast<long long>(xs.size());
        return values;
    };

    std::vector<double> fitness = evaluate_all(pop);
    auto best_index = [&] {
        return static_cast<int>(std::max_element(fitness.begin(), fitness.end()) - fitness.begin());
    };
    int best = best_index();
    result.best_so_far.push_back(fitness[best]);

    for (int gen = 0; gen < cfg.generations; ++gen) {
        // all random draws happen here, on one thread, in a fixed order
        std::vector<std::vector<double>> trials(np, std::vector<double>(dim));
        for (int i = 0; i < np; ++i) {
            int r1, r2, r3;
            do { r1 = static_cast<int>(unit(rng) * np); } while (r1 == i || r1 == np);
            do { r2 = static_cast<int>(unit(rng) * np); } while (r2 == i || r2 == r1 || r2 == np);
            do { r3 = static_cast<int>(unit(rng) * np); } while (r3 == i || r3 == r1 || r3 == r2 || r3 == np);
            const int jrand = std::min(dim - 1, static_cast<int>(unit(rng) * dim));
            for (int j = 0; j < dim; ++j) {
                double v;
                if (unit(rng) < cfg.crossover || j == jrand)
                    v = pop[r1][j] + cfg.weight * (pop[r2][j] - pop[r3][j]);
                else
                    v = pop[i][j];
                trials[i][j] = std::clamp(v, lower[j], upper[j]);
            }
        }
        const std::vector<double> trial_fitness = evaluate_all(trials);
        for (int i = 0; i < np; ++i) {
            if (trial_fitness[i] >= fitness[i]) {
                pop[i] = trials[i];
                fitness[i] = trial_fitness[i];
            }
        }
        best = best_index();
        result.best_so_far.push_back(std::max(result.best_so_far.back(), fitness[best]));
    }

    result.best = pop[best];
    result.best_value = fitness[best];
    // treat a plateau over the tail of the trace as convergence
    const std::size_t tail = 5;
    result.converged = false;
    if (result.best_so_far.size() > tail) {
        const double then = result.best_so_far[result.best_so_far.size() - 1 - tail];
        const double now = result.best_so_far.back();
        result.converged = std::abs(now - then) <= 1e-9 * (1.0 + std::abs(now));
    }
    return result;
}

}  // namespace gpcmom
