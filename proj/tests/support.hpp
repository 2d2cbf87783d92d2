#ifndef KSEG_TESTS_SUPPORT_HPP
#define KSEG_TESTS_SUPPORT_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <vector>

#include "kseg/counting.hpp"
#include "kseg/hmm.hpp"
#include "kseg/kseg_dp.hpp"
#include "kseg/oracle.hpp"

namespace kseg::testing {

// Two-state Gaussian model with sticky dynamics and four observations that
// switch sign halfway through.
inline HmmModel small_model() {
    return HmmModel({0.5, 0.5}, {{0.9, 0.1}, {0.1, 0.9}}, {Gaussian{-1.0, 1.0}, Gaussian{1.0, 1.0}});
}

inline ObsSeq small_obs() { return ObsSeq::reals({-1.2, -0.8, 1.1, 0.9}); }

// Three-state configuration used for the long simulated sequences.
inline HmmModel three_level_model(double stay = 0.985) {
    const double move = (1.0 - stay) / 2.0;
    return HmmModel({1.0 / 3, 1.0 / 3, 1.0 / 3},
                    {{stay, move, move}, {move, stay, move}, {move, move, stay}},
                    {Gaussian{-2.0, 0.81}, Gaussian{-1.0, 0.81}, Gaussian{1.0, 0.81}});
}

inline std::vector<double> random_simplex(int size, Rng& rng, double floor = 0.02) {
    std::gamma_distribution<double> g(1.0, 1.0);
    std::vector<double> p(size);
    double total = 0.0;
    for (double& v : p) {
        v = g(rng) + floor;
        total += v;
    }
    for (double& v : p) v /= total;
    return p;
}

inline HmmModel random_model(int M, bool categorical, Rng& rng, int vocabulary = 3) {
    std::vector<std::vector<double>> A;
    for (int m = 0; m < M; ++m) A.push_back(random_simplex(M, rng));
    std::vector<EmissionDist> em;
    std::uniform_real_distribution<double> mean(-2.0, 2.0), var(0.3, 2.0);
    for (int m = 0; m < M; ++m) {
        if (categorical) {
            em.push_back(Categorical{random_simplex(vocabulary, rng)});
        } else {
            em.push_back(Gaussian{mean(rng), var(rng)});
        }
    }
    return HmmModel(random_simplex(M, rng), std::move(A), std::move(em));
}

inline ObsSeq random_obs(const HmmModel& model, std::size_t N, Rng& rng) {
    return simulate(model, N, rng).observations;
}

inline CountingSpec random_spec(CountingMode mode, int M, Rng& rng) {
    std::uniform_int_distribution<int> bit(0, 1);
    switch (mode) {
    case CountingMode::standard:
        return CountingSpec::standard();
    case CountingMode::generalized: {
        std::vector<int> mu(M);
        std::vector<std::vector<int>> C(M, std::vector<int>(M, 0));
        for (int i = 0; i < M; ++i) {
            mu[i] = bit(rng);
            for (int j = 0; j < M; ++j) {
                if (i != j) C[i][j] = bit(rng);
            }
        }
        return CountingSpec::generalized(mu, C);
    }
    default: {
        std::vector<int> null_set;
        std::uniform_int_distribution<int> size(1, M - 1);
        std::vector<int> states(M);
        std::iota(states.begin(), states.end(), 0);
        std::shuffle(states.begin(), states.end(), rng);
        null_set.assign(states.begin(), states.begin() + size(rng));
        std::sort(null_set.begin(), null_set.end());
        return mode == CountingMode::excursion ? CountingSpec::excursion(null_set, M)
                                               : CountingSpec::restricted_excursion(null_set, M);
    }
    }
}

inline constexpr CountingMode all_modes[] = {CountingMode::standard, CountingMode::generalized,
                                             CountingMode::excursion, CountingMode::restricted_excursion};

// Lexicographic path index, matching the oracle's enumeration order.
inline std::size_t path_index(const StatePath& path, int M) {
    std::size_t idx = 0;
    for (int x : path) idx = idx * M + x;
    return idx;
}

inline double total_variation(const std::vector<StatePath>& draws, const std::vector<double>& target, int M) {
    std::vector<double> freq(target.size(), 0.0);
    for (const auto& p : draws) freq[path_index(p, M)] += 1.0;
    double tv = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) tv += std::abs(freq[i] / draws.size() - target[i]);
    return 0.5 * tv;
}

// Permutation of fitted states that best matches the true means.
inline std::vector<int> match_labels(const std::vector<double>& fitted, const std::vector<double>& truth) {
    std::vector<int> perm(fitted.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<int> best = perm;
    double best_err = INFINITY;
    do {
        double err = 0.0;
        for (std::size_t i = 0; i < perm.size(); ++i) err += std::abs(fitted[perm[i]] - truth[i]);
        if (err < best_err) {
            best_err = err;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

inline std::vector<double> gaussian_means(const HmmModel& model) {
    std::vector<double> out;
    for (const auto& e : model.emissions()) out.push_back(std::get<Gaussian>(e).mean);
    return out;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double out = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) out = std::max(out, std::abs(a[i] - b[i]));
    return out;
}

// Flattened parameter vector, for coordinate-wise comparisons of two fits.
// Single-sequence EM drives the initial distribution to a vertex, so callers
// comparing a fit against the generating model usually leave it out.
inline std::vector<double> flatten(const HmmModel& model, bool with_initial = true) {
    std::vector<double> out;
    if (with_initial) out.assign(model.initial().begin(), model.initial().end());
    for (const auto& row : model.transition_rows()) out.insert(out.end(), row.begin(), row.end());
    for (const auto& e : model.emissions()) {
        if (const auto* g = std::get_if<Gaussian>(&e)) {
            out.push_back(g->mean);
            out.push_back(g->variance);
        } else {
            const auto& p = std::get<Categorical>(e).probs;
            out.insert(out.end(), p.begin(), p.end());
        }
    }
    return out;
}

} // namespace kseg::testing

#endif
