#ifndef KSEG_KSEG_DP_HPP
#define KSEG_KSEG_DP_HPP

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kseg/augmented.hpp"
#include "kseg/counting.hpp"
#include "kseg/hmm.hpp"

namespace kseg {

/// Event on the final counter value.
class SegmentConstraint {
public:
    enum class Kind { exactly, at_most, range, greater_than };

    static SegmentConstraint exactly(int k);
    static SegmentConstraint at_most(int k);
    static SegmentConstraint range(int k1, int k2);
    static SegmentConstraint greater_than(int k);

    /// Parses "exact:K", "atmost:K", "range:K1:K2" or "greater:K".
    static SegmentConstraint parse(std::string_view text);

    Kind kind() const noexcept { return kind_; }
    int lower() const noexcept { return lo_; }
    /// Inclusive upper bound; unused for greater_than.
    int upper() const noexcept { return hi_; }

    bool admits(int count) const noexcept;
    std::string to_string() const;

private:
    SegmentConstraint(Kind kind, int lo, int hi) : kind_(kind), lo_(lo), hi_(hi) {}

    Kind kind_;
    int lo_;
    int hi_;
};

/// Augmented space sized for one constraint, plus the counters it admits at
/// position N. Exactly/AtMost/Range use a capped chain; GreaterThan(k) uses the
/// chain absorbing at k and admits only k + 1. The spec's own absorbing
/// threshold, if any, is replaced.
struct EventChain {
    AugmentedSpace space;
    std::vector<char> terminal;

    bool empty() const;
};

EventChain event_chain(const CountingSpec& spec, const SegmentConstraint& constraint,
                       int num_states, std::size_t length);

struct KsegForward {
    DpTables alpha;
    /// Counter value of log_joint_by_count[0].
    int min_count = 0;
    /// log p(s_N = k, y) for k = min_count, min_count + 1, ...
    std::vector<double> log_joint_by_count;

    /// -inf for values outside the table.
    double log_joint(int k) const;
};

KsegForward kseg_forward(const HmmModel& model, const ObsSeq& obs, const CountingSpec& spec, int k_max);

/// Beta table with every capped counter admitted at position N.
DpTables kseg_backward(const HmmModel& model, const ObsSeq& obs, const CountingSpec& spec, int k_max);

struct KsegPath {
    int count = 0;
    bool feasible = false;
    StatePath path;
    double log_joint = 0.0;
};

struct KsegDecoding {
    int min_count = 0;
    std::vector<KsegPath> entries; ///< one per counter value, ascending
    /// Non-empty when no count in range is feasible.
    std::string diagnostic;

    const KsegPath* find(int count) const;
};

/// Best path for every count up to k_max from one max-product pass.
KsegDecoding kseg_viterbi(const HmmModel& model, const ObsSeq& obs, const CountingSpec& spec, int k_max);

/// Best path among those satisfying the constraint; nullopt when no path does.
/// Ties go to the lexicographically smallest path.
std::optional<Decoded> kseg_map(const HmmModel& model, const ObsSeq& obs, const CountingSpec& spec,
                                const SegmentConstraint& constraint);

/// log p(event, y).
double kseg_log_joint(const HmmModel& model, const ObsSeq& obs, const CountingSpec& spec,
                      const SegmentConstraint& constraint);

/// p(event | y).
double kseg_prob(const HmmModel& model, const ObsSeq& obs, const CountingSpec& spec,
                 const SegmentConstraint& constraint);

/// `n` independent exact draws from p(x | event, y). Throws ZeroProbabilityEvent
/// when the event is impossible.
std::vector<StatePath> kseg_sample(const HmmModel& model, const ObsSeq& obs, const CountingSpec& spec,
                                   const SegmentConstraint& constraint, std::size_t n, Rng& rng);

struct SummaryEntry {
    int count = 0;
    /// True for the "> k_max" entry.
    bool overflow = false;
    double probability = 0.0;
    double log_joint = 0.0;      ///< log p(event, y)
    std::optional<StatePath> path;
    double path_log_joint = 0.0; ///< log p(y | x) + log p(x) of `path`
};

struct KsegSummary {
    int k_max = 0;
    double log_evidence = 0.0;
    std::vector<SummaryEntry> entries;

    double total_probability() const;
};

/// Probabilities and best paths for every count up to k_max plus the
/// absorbing "> k_max" event, from one pass of the chain absorbing at k_max.
KsegSummary kmax_summary(const HmmModel& model, const ObsSeq& obs, const CountingSpec& spec, int k_max);

} // namespace kseg

#endif
