#ifndef KSEG_ORACLE_HPP
#define KSEG_ORACLE_HPP

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <vector>

#include "kseg/counting.hpp"
#include "kseg/hmm.hpp"
#include "kseg/kseg_dp.hpp"

namespace kseg::oracle {

inline constexpr std::size_t default_path_cap = 1'000'000;

// Exhaustive path enumeration for small models. Path scores are evaluated
// term by term from the model parameters; nothing here goes through the
// recursions in hmm_core or kseg_dp, only the counting rules are shared.

/// Scores of all M^N paths. Path index i encodes x_1..x_N in base M with x_1
/// as the most significant digit, so index order is lexicographic order.
struct ExactPosterior {
    int num_states = 0;
    std::size_t length = 0;
    std::vector<double> log_scores; ///< log p(y | x) + log p(x)
    double log_evidence = 0.0;

    std::size_t num_paths() const noexcept { return log_scores.size(); }
    StatePath path(std::size_t index) const;
    double probability(std::size_t index) const;
};

/// Throws EnumerationTooLarge when M^N exceeds `cap`.
ExactPosterior enumerate_posterior(const HmmModel& model, const ObsSeq& obs,
                                   std::size_t cap = default_path_cap);

/// log p(y | x) + log p(x) for a single path.
double path_log_joint(const HmmModel& model, const ObsSeq& obs, const StatePath& path);

/// log p(event, y); -inf when no path satisfies the constraint.
double event_log_joint(const ExactPosterior& post, const CountingSpec& spec, const SegmentConstraint& constraint);

double event_prob(const ExactPosterior& post, const CountingSpec& spec, const SegmentConstraint& constraint);

/// Best satisfying path, lexicographically smallest among ties; nullopt when
/// the event is empty.
std::optional<Decoded> map_path(const ExactPosterior& post, const CountingSpec& spec,
                                const SegmentConstraint& constraint);

/// p(x | event, y) indexed like `log_scores`. Throws ZeroProbabilityEvent when
/// the event has probability zero.
std::vector<double> conditional(const ExactPosterior& post, const CountingSpec& spec,
                                const SegmentConstraint& constraint);

/// Site and pair marginals of a distribution over all paths.
PosteriorMarginals marginals_of(const ExactPosterior& post, const std::vector<double>& path_probs);

/// Writes "path,log_score" rows for debugging.
void write_table(std::ostream& out, const ExactPosterior& post);

} // namespace kseg::oracle

#endif
