#ifndef KSEG_AUGMENTED_HPP
#define KSEG_AUGMENTED_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "kseg/counting.hpp"
#include "kseg/hmm.hpp"

namespace kseg {

/// Position-major log tables over the augmented state (counter, hidden state).
/// Cell (c, x) of position n lives at values[(n * counters + c) * states + x];
/// infeasible cells hold -inf.
struct DpTables {
    std::size_t length = 0;
    int counters = 0;
    int states = 0;
    std::vector<double> values;

    DpTables() = default;
    DpTables(std::size_t length, int counters, int states, double fill);

    std::size_t width() const noexcept { return static_cast<std::size_t>(counters) * states; }
    double at(std::size_t n, int c, int x) const { return values[(n * counters + c) * states + x]; }
    std::span<const double> row(std::size_t n) const { return {values.data() + n * width(), width()}; }
    std::span<double> row(std::size_t n) { return {values.data() + n * width(), width()}; }
};

/// Viterbi messages plus packed backpointers (predecessor cell index, -1 when
/// the cell is unreachable). `rank` orders the reachable cells of each
/// position by the lexicographic order of their best prefixes.
struct ViterbiTables {
    DpTables gamma;
    std::vector<std::int32_t> delta;
    std::vector<std::int32_t> rank;

    /// True when `a` beats `b` at position n: higher score, or an equal score
    /// reached through the lexicographically smaller prefix.
    bool better(std::size_t n, int a, int b) const;
};

/// The deterministic counting chain crossed with the hidden chain, flattened
/// into a sparse transition graph that every augmented recursion walks.
///
/// Cells are indexed `counter * M + state`, with counters ordered by
/// (count, flag). Each cell has at most M predecessors per counter that can
/// reach it, so one sweep over the graph costs O(counters * M^2).
class AugmentedSpace {
public:
    struct Edge {
        std::int32_t source;
        std::int32_t target;
    };

    /// `k_max` caps the counter unless the spec is absorbing, in which case
    /// the cap is absorb_at + 1.
    AugmentedSpace(const CountingSpec& spec, int num_states, int k_max);

    const CountingSpec& spec() const noexcept { return spec_; }
    int num_states() const noexcept { return states_; }
    int num_counters() const noexcept { return static_cast<int>(counters_.size()); }
    std::size_t size() const noexcept { return counters_.size() * states_; }

    const CounterState& counter(int c) const { return counters_[c]; }
    /// -1 when the value lies outside the capped space.
    int counter_index(CounterState s) const;

    /// Cell occupied at position 1 when the path starts in `state`, or -1.
    int initial_cell(int state) const { return initial_[state]; }

    /// Incoming edges of `target`, sorted by source cell.
    std::span<const Edge> predecessors(int target) const {
        return {in_edges_.data() + in_offsets_[target], in_edges_.data() + in_offsets_[target + 1]};
    }
    /// Outgoing edges of `source`, sorted by target cell.
    std::span<const Edge> successors(int source) const {
        return {out_edges_.data() + out_offsets_[source], out_edges_.data() + out_offsets_[source + 1]};
    }

private:
    CountingSpec spec_;
    int states_;
    std::vector<CounterState> counters_;
    std::vector<int> initial_;
    std::vector<Edge> in_edges_;
    std::vector<std::size_t> in_offsets_;
    std::vector<Edge> out_edges_;
    std::vector<std::size_t> out_offsets_;
};

/// Log-space alpha recursion: alpha(n, c, x) = log p(x_n = x, s_n = c, y_1..y_n).
DpTables augmented_forward(const AugmentedSpace& space, const HmmModel& model,
                           const LogTable& emissions);

/// Log-space beta recursion. `terminal[c]` selects the counters admitted at
/// position N (zero there, -inf elsewhere).
DpTables augmented_backward(const AugmentedSpace& space, const HmmModel& model,
                            const LogTable& emissions, std::span<const char> terminal);

/// Max-product recursion with backpointers. Among equal-scoring predecessors
/// the one with the lexicographically smallest prefix wins, so backtracking
/// from the winning final cell yields the smallest optimal path.
ViterbiTables augmented_viterbi(const AugmentedSpace& space, const HmmModel& model,
                                const LogTable& emissions);

/// Follows backpointers from `final_cell` at position N.
StatePath backtrack(const AugmentedSpace& space, const ViterbiTables& tables, int final_cell);

/// Backward sampling through a forward table, starting from a cell drawn among
/// the cells whose counter is admitted by `terminal`.
StatePath sample_backward(const AugmentedSpace& space, const HmmModel& model,
                          const DpTables& alpha, std::span<const char> terminal, Rng& rng);

} // namespace kseg

#endif
