#ifndef KSEG_LEARNING_HPP
#define KSEG_LEARNING_HPP

#include <cstddef>
#include <optional>
#include <vector>

#include "kseg/counting.hpp"
#include "kseg/hmm.hpp"
#include "kseg/kseg_dp.hpp"

namespace kseg {

/// Site and pair marginals of p(x | event, y). `log_normalizer` is
/// log p(event, y). Throws ZeroProbabilityEvent if the event is impossible.
PosteriorMarginals constrained_marginals(const HmmModel& model, const ObsSeq& obs,
                                         const CountingSpec& spec, const SegmentConstraint& constraint);

struct ConstrainedFitResult {
    HmmModel model;
    /// log p(event, y | theta) at each visited theta (plus the categorical
    /// smoothing prior); the last entry belongs to `model`.
    std::vector<double> constrained_loglik_trace;
    /// Constrained MAP path under the fitted model.
    std::optional<Decoded> final_path;
};

/// EM for the likelihood p(event, y | theta): E-step marginals come from the
/// augmented forward-backward pass, the M-step is ordinary Baum-Welch.
ConstrainedFitResult constrained_em(const HmmModel& init, const ObsSeq& obs, const CountingSpec& spec,
                                    const SegmentConstraint& constraint, const EmOptions& opts = {});

struct NormalInverseGamma {
    double mean = 0.0;
    double kappa = 0.01;
    double shape = 1.0;
    double rate = 1.0;
};

/// Conjugate prior: Dirichlet rows for pi0 and A, Normal-Inverse-Gamma per
/// Gaussian emission, Dirichlet per categorical emission.
struct ConjugatePrior {
    double initial_concentration = 1.0;
    double transition_concentration = 1.0;
    NormalInverseGamma gaussian;
    double emission_concentration = 1.0;
};

/// log p(theta) under the prior.
double log_prior_density(const HmmModel& model, const ConjugatePrior& prior);

/// Parameter draws paired with their log p(y | theta) + log p(theta) scores.
class ParamSampleSet {
public:
    ParamSampleSet(std::vector<HmmModel> models, std::vector<double> scores);

    std::size_t size() const noexcept { return models_.size(); }
    const HmmModel& model(std::size_t t) const { return models_[t]; }
    double score(std::size_t t) const { return scores_[t]; }
    const std::vector<HmmModel>& models() const noexcept { return models_; }
    const std::vector<double>& scores() const noexcept { return scores_; }

private:
    std::vector<HmmModel> models_;
    std::vector<double> scores_;
};

struct GibbsOptions {
    int iterations = 1000;
    double burn_in_fraction = 0.2;
    int thin = 1;
    /// Consecutive parameter redraws allowed when the constraint has zero
    /// probability under a freshly drawn theta.
    int max_rejections = 100;
};

struct GibbsResult {
    ParamSampleSet samples;
    std::vector<StatePath> paths; ///< path drawn alongside each stored sample
    int rejections = 0;
};

/// Gibbs sampler alternating constrained FF-BS path draws with exact
/// conjugate parameter draws given the path.
GibbsResult gibbs_fit(const ConjugatePrior& prior, const HmmModel& init, const ObsSeq& obs,
                      const CountingSpec& spec, const SegmentConstraint& constraint,
                      const GibbsOptions& opts, Rng& rng);

/// Draw of theta from p(theta | x, y) under the conjugate prior.
HmmModel sample_parameters(const ConjugatePrior& prior, const HmmModel& shape_like, const ObsSeq& obs,
                           const StatePath& path, Rng& rng);

/// Rao-Blackwellized p(event | y): the average of p(event | theta_t, y).
double retrospective_prob(const ParamSampleSet& samples, const ObsSeq& obs, const CountingSpec& spec,
                          const SegmentConstraint& constraint);

struct RetrospectiveMap {
    std::size_t sample_index = 0;
    Decoded decoded;
};

/// Constrained MAP path at the highest-scoring sample (lowest index on ties).
RetrospectiveMap retrospective_map(const ParamSampleSet& samples, const ObsSeq& obs, const CountingSpec& spec,
                                   const SegmentConstraint& constraint);

/// Mean squared error between the observations and the emission means along
/// `path`. Gaussian models only.
double reconstruction_error(const HmmModel& model, const StatePath& path, const ObsSeq& obs);

} // namespace kseg

#endif
