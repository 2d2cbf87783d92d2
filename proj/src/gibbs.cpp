#include <cmath>
#include <numbers>

#include "kseg/errors.hpp"
#include "kseg/learning.hpp"
#include "kseg/logmath.hpp"

namespace kseg {

namespace {

std::vector<double> draw_dirichlet(std::span<const double> concentration, Rng& rng) {
    std::vector<double> out(concentration.size());
    double total = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::gamma_distribution<double> g(concentration[i], 1.0);
        out[i] = g(rng);
        total += out[i];
    }
    if (!(total > 0.0)) throw std::runtime_error("Dirichlet draw underflowed");
    for (double& v : out) v /= total;
    return out;
}

double dirichlet_log_density(std::span<const double> probs, double concentration) {
    const double k = static_cast<double>(probs.size());
    double out = std::lgamma(concentration * k) - k * std::lgamma(concentration);
    for (double p : probs) out += (concentration - 1.0) * safe_log(p);
    return out;
}

} // namespace

double log_prior_density(const HmmModel& model, const ConjugatePrior& prior) {
    const int M = model.num_states();
    double out = dirichlet_log_density(model.initial(), prior.initial_concentration);
    for (const auto& row : model.transition_rows()) out += dirichlet_log_density(row, prior.transition_concentration);
    for (int m = 0; m < M; ++m) {
        if (auto* g = std::get_if<Gaussian>(&model.emission(m))) {
            const auto& nig = prior.gaussian;
            const double var = g->variance;
            out += nig.shape * std::log(nig.rate) - std::lgamma(nig.shape) - (nig.shape + 1.0) * std::log(var) -
                   nig.rate / var;
            const double d = g->mean - nig.mean;
            out += -0.5 * std::log(2.0 * std::numbers::pi * var / nig.kappa) - 0.5 * nig.kappa * d * d / var;
        } else {
            out += dirichlet_log_density(std::get<Categorical>(model.emission(m)).probs, prior.emission_concentration);
        }
    }
    return out;
}

HmmModel sample_parameters(const ConjugatePrior& prior, const HmmModel& shape_like, const ObsSeq& obs,
                           const StatePath& path, Rng& rng) {
    const int M = shape_like.num_states();
    const std::size_t N = obs.size();

    std::vector<double> conc(M, prior.initial_concentration);
    conc[path[0]] += 1.0;
    std::vector<double> initial = draw_dirichlet(conc, rng);

    std::vector<std::vector<double>> counts(M, std::vector<double>(M, prior.transition_concentration));
    for (std::size_t n = 1; n < N; ++n) counts[path[n - 1]][path[n]] += 1.0;
    std::vector<std::vector<double>> transition;
    for (const auto& row : counts) transition.push_back(draw_dirichlet(row, rng));

    std::vector<EmissionDist> emissions;
    if (shape_like.family() == EmissionFamily::gaussian) {
        auto ys = obs.real_values();
        const auto& nig = prior.gaussian;
        for (int m = 0; m < M; ++m) {
            double count = 0.0, sum = 0.0;
            for (std::size_t n = 0; n < N; ++n) {
                if (path[n] == m) {
                    count += 1.0;
                    sum += ys[n];
                }
            }
            const double ybar = count > 0.0 ? sum / count : 0.0;
            double ss = 0.0;
            for (std::size_t n = 0; n < N; ++n) {
                if (path[n] == m) ss += (ys[n] - ybar) * (ys[n] - ybar);
            }
            const double kappa = nig.kappa + count;
            const double mean = (nig.kappa * nig.mean + count * ybar) / kappa;
            const double shape = nig.shape + 0.5 * count;
            const double rate = nig.rate + 0.5 * ss +
                                0.5 * nig.kappa * count * (ybar - nig.mean) * (ybar - nig.mean) / kappa;
            std::gamma_distribution<double> precision(shape, 1.0 / rate);
            const double var = 1.0 / precision(rng);
            std::normal_distribution<double> mu(mean, std::sqrt(var / kappa));
            emissions.push_back(Gaussian{mu(rng), var});
        }
    } else {
        auto ys = obs.symbol_values();
        const int V = shape_like.vocabulary_size();
        for (int m = 0; m < M; ++m) {
            std::vector<double> c(V, prior.emission_concentration);
            for (std::size_t n = 0; n < N; ++n) {
                if (path[n] == m) c[ys[n]] += 1.0;
            }
            emissions.push_back(Categorical{draw_dirichlet(c, rng)});
        }
    }
    return HmmModel(std::move(initial), std::move(transition), std::move(emissions));
}

GibbsResult gibbs_fit(const ConjugatePrior& prior, const HmmModel& init, const ObsSeq& obs,
                      const CountingSpec& spec, const SegmentConstraint& constraint,
                      const GibbsOptions& opts, Rng& rng) {
    if (opts.iterations < 1) throw InvalidInput("Gibbs sampling needs at least one iteration");
    if (opts.thin < 1) throw InvalidInput("thinning interval must be at least 1");
    if (opts.burn_in_fraction < 0.0 || opts.burn_in_fraction >= 1.0) {
        throw InvalidInput("burn-in fraction must lie in [0, 1)");
    }
    init.check_compatible(obs);

    const int burn = static_cast<int>(std::floor(opts.burn_in_fraction * opts.iterations));
    HmmModel theta = init;
    StatePath path;
    int rejections = 0;
    std::vector<HmmModel> models;
    std::vector<double> scores;
    std::vector<StatePath> paths;

    for (int it = 0; it < opts.iterations; ++it) {
        int attempts = 0;
        for (;;) {
            try {
                path = kseg_sample(theta, obs, spec, constraint, 1, rng).front();
                break;
            } catch (const ZeroProbabilityEvent&) {
                if (path.empty()) {
                    throw ZeroProbabilityEvent("constraint " + constraint.to_string() +
                                                   " has zero probability under the initial parameters",
                                               0.0);
                }
                ++rejections;
                if (++attempts > opts.max_rejections) {
                    throw ZeroProbabilityEvent("constraint " + constraint.to_string() +
                                                   " kept zero probability after " +
                                                   std::to_string(opts.max_rejections) + " parameter redraws",
                                               0.0);
                }
                // path still holds the previous constrained draw
                theta = sample_parameters(prior, theta, obs, path, rng);
            }
        }
        theta = sample_parameters(prior, theta, obs, path, rng);
        if (it >= burn && (it - burn) % opts.thin == 0) {
            scores.push_back(forward(theta, obs).log_likelihood + log_prior_density(theta, prior));
            models.push_back(theta);
            paths.push_back(path);
        }
    }
    return {ParamSampleSet(std::move(models), std::move(scores)), std::move(paths), rejections};
}

} // namespace kseg
