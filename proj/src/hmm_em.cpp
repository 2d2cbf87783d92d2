#include <algorithm>
#include <cmath>

#include "kseg/errors.hpp"
#include "kseg/hmm.hpp"
#include "kseg/logmath.hpp"

namespace kseg {

namespace {

// Below this expected count a row or state is treated as unvisited and keeps
// its previous parameters.
constexpr double kMinMass = 1e-300;

void normalize(std::vector<double>& v) {
    double total = 0.0;
    for (double x : v) total += x;
    for (double& x : v) x /= total;
}

bool is_fixed(const EmOptions& opts, int state) {
    return std::find(opts.fixed_emissions.begin(), opts.fixed_emissions.end(), state) !=
           opts.fixed_emissions.end();
}

} // namespace

HmmModel maximization_step(const HmmModel& current, const ObsSeq& obs,
                           const PosteriorMarginals& marginals, const EmOptions& opts) {
    const int M = current.num_states();
    const std::size_t N = obs.size();

    std::vector<double> initial(M);
    for (int m = 0; m < M; ++m) initial[m] = marginals.site_at(0, m);
    normalize(initial);

    std::vector<std::vector<double>> transition = current.transition_rows();
    for (int i = 0; i < M; ++i) {
        std::vector<double> row(M, 0.0);
        for (std::size_t n = 0; n + 1 < N; ++n) {
            for (int j = 0; j < M; ++j) row[j] += marginals.pair_at(n, i, j);
        }
        double total = 0.0;
        for (double x : row) total += x;
        if (total > kMinMass) {
            normalize(row);
            transition[i] = std::move(row);
        }
    }

    std::vector<EmissionDist> emissions(current.emissions().begin(), current.emissions().end());
    for (int m = 0; m < M; ++m) {
        if (is_fixed(opts, m)) continue;
        double weight = 0.0;
        for (std::size_t n = 0; n < N; ++n) weight += marginals.site_at(n, m);

        if (current.family() == EmissionFamily::gaussian) {
            if (weight <= kMinMass) continue;
            auto ys = obs.real_values();
            double mean = 0.0;
            for (std::size_t n = 0; n < N; ++n) mean += marginals.site_at(n, m) * ys[n];
            mean /= weight;
            double var = 0.0;
            for (std::size_t n = 0; n < N; ++n) {
                double d = ys[n] - mean;
                var += marginals.site_at(n, m) * d * d;
            }
            var = std::max(var / weight, opts.variance_floor);
            emissions[m] = Gaussian{mean, var};
        } else {
            const int V = current.vocabulary_size();
            std::vector<double> probs(V, 1.0);
            auto ys = obs.symbol_values();
            for (std::size_t n = 0; n < N; ++n) probs[ys[n]] += marginals.site_at(n, m);
            normalize(probs);
            emissions[m] = Categorical{std::move(probs)};
        }
    }
    return HmmModel(std::move(initial), std::move(transition), std::move(emissions));
}

double emission_smoothing_log_prior(const HmmModel& model) {
    if (model.family() != EmissionFamily::categorical) return 0.0;
    double total = 0.0;
    for (const auto& e : model.emissions()) {
        for (double p : std::get<Categorical>(e).probs) total += safe_log(p);
    }
    return total;
}

EmResult em_fit(const HmmModel& init, const ObsSeq& obs, const EmOptions& opts) {
    if (opts.max_iterations < 1) throw InvalidInput("EM needs at least one iteration");
    init.check_compatible(obs);
    HmmModel model = init;
    std::vector<double> trace;
    for (int iter = 0;; ++iter) {
        PosteriorMarginals post = posterior_marginals(model, obs);
        const double objective = post.log_normalizer + emission_smoothing_log_prior(model);
        trace.push_back(objective);
        if (trace.size() >= 2) {
            const double prev = trace[trace.size() - 2];
            if (std::abs(objective - prev) <= opts.relative_tolerance * std::abs(prev)) break;
        }
        if (iter + 1 >= opts.max_iterations) break;
        model = maximization_step(model, obs, post, opts);
    }
    return {std::move(model), std::move(trace)};
}

HmmModel default_init(const ObsSeq& obs, int num_states, int vocabulary_size) {
    if (num_states < 1) throw InvalidInput("model needs at least one state");
    const int M = num_states;
    std::vector<double> initial(M, 1.0 / M);
    std::vector<std::vector<double>> transition(M, std::vector<double>(M, M > 1 ? 0.1 / (M - 1) : 1.0));
    for (int m = 0; m < M; ++m) transition[m][m] = M > 1 ? 0.9 : 1.0;

    std::vector<EmissionDist> emissions;
    if (obs.family() == EmissionFamily::gaussian) {
        std::vector<double> sorted(obs.real_values().begin(), obs.real_values().end());
        std::sort(sorted.begin(), sorted.end());
        const double n = static_cast<double>(sorted.size());
        double mean = 0.0;
        for (double y : sorted) mean += y;
        mean /= n;
        double var = 0.0;
        for (double y : sorted) var += (y - mean) * (y - mean);
        var = std::max(var / n, 1e-6);
        for (int m = 0; m < M; ++m) {
            const double q = static_cast<double>(m + 1) / (M + 1);
            const double pos = q * (n - 1);
            const auto lo = static_cast<std::size_t>(std::floor(pos));
            const auto hi = std::min(lo + 1, sorted.size() - 1);
            const double frac = pos - static_cast<double>(lo);
            emissions.push_back(Gaussian{sorted[lo] * (1.0 - frac) + sorted[hi] * frac, var});
        }
    } else {
        int V = vocabulary_size;
        for (int s : obs.symbol_values()) V = std::max(V, s + 1);
        std::vector<double> counts(V, 1.0);
        for (int s : obs.symbol_values()) counts[s] += 1.0;
        for (int m = 0; m < M; ++m) {
            std::vector<double> probs(V);
            for (int v = 0; v < V; ++v) probs[v] = counts[v] * (v % M == m ? 1.5 : 1.0);
            normalize(probs);
            emissions.push_back(Categorical{std::move(probs)});
        }
    }
    return HmmModel(std::move(initial), std::move(transition), std::move(emissions));
}

EmResult em_fit_restarts(const ObsSeq& obs, int num_states, int starts, Rng& rng, const EmOptions& opts,
                         int vocabulary_size) {
    if (starts < 1) throw InvalidInput("EM needs at least one start");
    const HmmModel base = default_init(obs, num_states, vocabulary_size);
    EmResult best = em_fit(base, obs, opts);
    for (int s = 1; s < starts; ++s) {
        std::vector<EmissionDist> emissions;
        if (obs.family() == EmissionFamily::gaussian) {
            const auto values = obs.real_values();
            std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
            const double spread = std::get<Gaussian>(base.emission(0)).variance;
            for (int m = 0; m < num_states; ++m) emissions.push_back(Gaussian{values[pick(rng)], spread});
        } else {
            std::gamma_distribution<double> gamma(1.0, 1.0);
            const int V = base.vocabulary_size();
            for (int m = 0; m < num_states; ++m) {
                std::vector<double> probs(V);
                for (double& p : probs) p = gamma(rng) + 1e-3;
                normalize(probs);
                emissions.push_back(Categorical{std::move(probs)});
            }
        }
        const HmmModel init(std::vector<double>(base.initial().begin(), base.initial().end()), base.transition_rows(),
                            std::move(emissions));
        EmResult run = em_fit(init, obs, opts);
        if (run.loglik_trace.back() > best.loglik_trace.back()) best = std::move(run);
    }
    return best;
}

} // namespace kseg
