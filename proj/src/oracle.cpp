#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "kseg/errors.hpp"
#include "kseg/logmath.hpp"
#include "kseg/oracle.hpp"

namespace kseg::oracle {

namespace {

double emission_log_density(const EmissionDist& dist, Observation y) {
    if (const auto* g = std::get_if<Gaussian>(&dist)) {
        const double d = std::get<double>(y) - g->mean;
        return -d * d / (2.0 * g->variance) - 0.5 * std::log(2.0 * std::numbers::pi * g->variance);
    }
    return std::log(std::get<Categorical>(dist).probs.at(std::get<Symbol>(y).index));
}

std::vector<char> satisfying(const ExactPosterior& post, const CountingSpec& spec,
                             const SegmentConstraint& constraint) {
    std::vector<char> keep(post.num_paths(), 0);
    for (std::size_t i = 0; i < post.num_paths(); ++i) {
        const auto count = count_segments(post.path(i), spec);
        keep[i] = count && constraint.admits(*count);
    }
    return keep;
}

double log_sum(const std::vector<double>& values, const std::vector<char>* mask) {
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < values.size(); ++i) {
        if ((!mask || (*mask)[i]) && values[i] > top) top = values[i];
    }
    if (top == -std::numeric_limits<double>::infinity()) return top;
    double acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!mask || (*mask)[i]) acc += std::exp(values[i] - top);
    }
    return top + std::log(acc);
}

} // namespace

StatePath ExactPosterior::path(std::size_t index) const {
    StatePath out(length);
    for (std::size_t n = length; n-- > 0;) {
        out[n] = static_cast<int>(index % num_states);
        index /= num_states;
    }
    return out;
}

double ExactPosterior::probability(std::size_t index) const {
    return std::exp(log_scores[index] - log_evidence);
}

double path_log_joint(const HmmModel& model, const ObsSeq& obs, const StatePath& path) {
    if (path.size() != obs.size()) throw InvalidInput("path and observations differ in length");
    double out = std::log(model.initial(path[0])) + emission_log_density(model.emission(path[0]), obs[0]);
    for (std::size_t n = 1; n < path.size(); ++n) {
        out += std::log(model.transition(path[n - 1], path[n]));
        out += emission_log_density(model.emission(path[n]), obs[n]);
    }
    return out;
}

ExactPosterior enumerate_posterior(const HmmModel& model, const ObsSeq& obs, std::size_t cap) {
    model.check_compatible(obs);
    const auto M = static_cast<std::size_t>(model.num_states());
    std::size_t total = 1;
    for (std::size_t n = 0; n < obs.size(); ++n) {
        if (total > cap / M) {
            throw EnumerationTooLarge("enumerating " + std::to_string(M) + "^" + std::to_string(obs.size()) +
                                      " paths exceeds the cap of " + std::to_string(cap));
        }
        total *= M;
    }
    ExactPosterior post;
    post.num_states = model.num_states();
    post.length = obs.size();
    post.log_scores.resize(total);
    for (std::size_t i = 0; i < total; ++i) post.log_scores[i] = path_log_joint(model, obs, post.path(i));
    post.log_evidence = log_sum(post.log_scores, nullptr);
    return post;
}

double event_log_joint(const ExactPosterior& post, const CountingSpec& spec, const SegmentConstraint& constraint) {
    const auto keep = satisfying(post, spec, constraint);
    return log_sum(post.log_scores, &keep);
}

double event_prob(const ExactPosterior& post, const CountingSpec& spec, const SegmentConstraint& constraint) {
    const auto keep = satisfying(post, spec, constraint);
    double total = 0.0;
    for (std::size_t i = 0; i < post.num_paths(); ++i) {
        if (keep[i]) total += post.probability(i);
    }
    return total;
}

std::optional<Decoded> map_path(const ExactPosterior& post, const CountingSpec& spec,
                                const SegmentConstraint& constraint) {
    const auto keep = satisfying(post, spec, constraint);
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < post.num_paths(); ++i) {
        if (!keep[i] || post.log_scores[i] == -std::numeric_limits<double>::infinity()) continue;
        if (!best || compare_scores(post.log_scores[i], post.log_scores[*best]) > 0) best = i;
    }
    if (!best) return std::nullopt;
    return Decoded{post.path(*best), post.log_scores[*best]};
}

std::vector<double> conditional(const ExactPosterior& post, const CountingSpec& spec,
                                const SegmentConstraint& constraint) {
    const auto keep = satisfying(post, spec, constraint);
    const double z = log_sum(post.log_scores, &keep);
    if (z == -std::numeric_limits<double>::infinity()) {
        throw ZeroProbabilityEvent("constraint " + constraint.to_string() + " has probability 0", 0.0);
    }
    std::vector<double> out(post.num_paths(), 0.0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (keep[i]) out[i] = std::exp(post.log_scores[i] - z);
    }
    return out;
}

PosteriorMarginals marginals_of(const ExactPosterior& post, const std::vector<double>& path_probs) {
    const int M = post.num_states;
    const std::size_t N = post.length;
    PosteriorMarginals out;
    out.length = N;
    out.num_states = M;
    out.log_normalizer = post.log_evidence;
    out.site.assign(N * M, 0.0);
    out.pair.assign(N > 0 ? (N - 1) * M * M : 0, 0.0);
    for (std::size_t i = 0; i < post.num_paths(); ++i) {
        if (path_probs[i] == 0.0) continue;
        const StatePath x = post.path(i);
        for (std::size_t n = 0; n < N; ++n) {
            out.site[n * M + x[n]] += path_probs[i];
            if (n + 1 < N) out.pair[(n * M + x[n]) * M + x[n + 1]] += path_probs[i];
        }
    }
    return out;
}

void write_table(std::ostream& out, const ExactPosterior& post) {
    out << "path,log_score\n";
    out.precision(17);
    for (std::size_t i = 0; i < post.num_paths(); ++i) {
        for (int x : post.path(i)) out << x;
        out << ',' << post.log_scores[i] << '\n';
    }
}

} // namespace kseg::oracle
