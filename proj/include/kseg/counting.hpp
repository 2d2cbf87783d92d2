#ifndef KSEG_COUNTING_HPP
#define KSEG_COUNTING_HPP

#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace kseg {

enum class CountingMode { standard, generalized, excursion, restricted_excursion };

/// Which transitions (and initial states) advance the segment counter.
///
/// Standard counts every change of state plus the initial segment. The
/// generalized mode counts the initial segment when mu(x1) = 1 and a
/// transition i -> j when C(i, j) = 1. The excursion modes count completed
/// null -> abnormal... -> null round trips; the restricted variant also
/// requires the abnormal stretch to stay in one state. An optional absorbing
/// threshold k freezes the counter at k + 1.
class CountingSpec {
public:
    static CountingSpec standard();
    static CountingSpec generalized(std::vector<int> mu, std::vector<std::vector<int>> counted);
    static CountingSpec excursion(std::vector<int> null_set, int num_states);
    static CountingSpec restricted_excursion(std::vector<int> null_set, int num_states);

    CountingSpec with_absorption(int k) const;
    CountingSpec without_absorption() const;

    CountingMode mode() const noexcept { return mode_; }
    std::optional<int> absorb_at() const noexcept { return absorb_at_; }
    bool tracks_excursions() const noexcept {
        return mode_ == CountingMode::excursion || mode_ == CountingMode::restricted_excursion;
    }

    /// Number of hidden states the spec was built for; 0 when it applies to
    /// any model (standard mode).
    int num_states() const noexcept { return num_states_; }
    /// Throws InvalidInput if the spec cannot be used with an M-state model.
    void check_states(int num_states) const;

    int counts_initial(int state) const;
    int counts_transition(int from, int to) const;
    bool is_null(int state) const;

    /// Smallest counter value any path can end with (0 or 1).
    int min_count() const;
    /// Largest count a length-N path can reach, ignoring absorption.
    int max_attainable_count(std::size_t length) const;

    const std::vector<int>& mu() const noexcept { return mu_; }
    const std::vector<std::vector<int>>& counted() const noexcept { return counted_; }
    std::vector<int> null_set() const;

private:
    CountingMode mode_ = CountingMode::standard;
    int num_states_ = 0;
    std::vector<int> mu_;
    std::vector<std::vector<int>> counted_;
    std::vector<bool> null_;
    std::optional<int> absorb_at_;
};

/// Auxiliary counter value. `flag` is the excursion phase (1 while inside an
/// excursion) and stays 0 outside the excursion modes.
struct CounterState {
    int count = 0;
    int flag = 0;

    auto operator<=>(const CounterState&) const = default;
};

/// nullopt means the step is forbidden (probability zero).
using CounterStep = std::optional<CounterState>;

CounterState counter_init(const CountingSpec& spec, int first_state);

/// Deterministic successor of `prev` given the hidden transition. When
/// `k_max` is set and the spec is not absorbing, exceeding it is forbidden.
CounterStep counter_step(const CountingSpec& spec, CounterState prev, int prev_state,
                         int cur_state, std::optional<int> k_max = std::nullopt);

/// Final counter of the unique trajectory generated by `path`; nullopt when
/// the path is forbidden (restricted excursions).
std::optional<int> count_segments(std::span<const int> path, const CountingSpec& spec);

/// Every counter value reachable under the cap, ordered by (count, flag).
std::vector<CounterState> counter_state_space(const CountingSpec& spec, int k_max);

} // namespace kseg

#endif
