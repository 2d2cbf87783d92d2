#include "kseg/errors.hpp"
#include "kseg/learning.hpp"

namespace kseg {

ParamSampleSet::ParamSampleSet(std::vector<HmmModel> models, std::vector<double> scores)
    : models_(std::move(models)), scores_(std::move(scores)) {
    if (models_.empty()) throw InvalidInput("parameter sample set is empty");
    if (models_.size() != scores_.size()) throw InvalidInput("one score is needed per parameter sample");
    const int M = models_.front().num_states();
    for (const auto& m : models_) {
        if (m.num_states() != M || m.family() != models_.front().family()) {
            throw InvalidInput("parameter samples disagree on model structure");
        }
    }
}

double retrospective_prob(const ParamSampleSet& samples, const ObsSeq& obs, const CountingSpec& spec,
                          const SegmentConstraint& constraint) {
    double total = 0.0;
    for (const auto& m : samples.models()) total += kseg_prob(m, obs, spec, constraint);
    return total / static_cast<double>(samples.size());
}

RetrospectiveMap retrospective_map(const ParamSampleSet& samples, const ObsSeq& obs, const CountingSpec& spec,
                                   const SegmentConstraint& constraint) {
    std::size_t best = 0;
    for (std::size_t t = 1; t < samples.size(); ++t) {
        if (samples.score(t) > samples.score(best)) best = t;
    }
    auto decoded = kseg_map(samples.model(best), obs, spec, constraint);
    if (!decoded) {
        throw ZeroProbabilityEvent("constraint " + constraint.to_string() +
                                       " has no feasible path at the selected parameter sample",
                                   0.0);
    }
    return {best, std::move(*decoded)};
}

double reconstruction_error(const HmmModel& model, const StatePath& path, const ObsSeq& obs) {
    if (model.family() != EmissionFamily::gaussian) {
        throw Unsupported("reconstruction error needs Gaussian emissions");
    }
    if (path.size() != obs.size()) throw InvalidInput("path and observations differ in length");
    auto ys = obs.real_values();
    double total = 0.0;
    for (std::size_t n = 0; n < ys.size(); ++n) {
        if (path[n] < 0 || path[n] >= model.num_states()) throw InvalidInput("state index out of range");
        const double d = ys[n] - std::get<Gaussian>(model.emission(path[n])).mean;
        total += d * d;
    }
    return total / static_cast<double>(ys.size());
}

} // namespace kseg
