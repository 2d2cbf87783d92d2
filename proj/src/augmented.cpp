#include <algorithm>
#include <cmath>
#include <utility>

#include "kseg/augmented.hpp"
#include "kseg/errors.hpp"
#include "kseg/logmath.hpp"

namespace kseg {

DpTables::DpTables(std::size_t length_, int counters_, int states_, double fill)
    : length(length_), counters(counters_), states(states_),
      values(length_ * static_cast<std::size_t>(counters_) * states_, fill) {}

AugmentedSpace::AugmentedSpace(const CountingSpec& spec, int num_states, int k_max)
    : spec_(spec), states_(num_states) {
    spec.check_states(num_states);
    if (num_states < 1) throw InvalidInput("model needs at least one state");
    if (!spec.absorb_at() && k_max < spec.min_count()) {
        throw InvalidInput("k_max is below the smallest attainable count");
    }
    counters_ = counter_state_space(spec, spec.absorb_at() ? 0 : k_max);
    const std::optional<int> cap = spec.absorb_at() ? std::nullopt : std::optional<int>(k_max);

    const int M = states_;
    initial_.assign(M, -1);
    for (int x = 0; x < M; ++x) {
        const int c = counter_index(counter_init(spec, x));
        if (c >= 0) initial_[x] = c * M + x;
    }

    const auto cells = size();
    out_offsets_.assign(cells + 1, 0);
    for (std::size_t source = 0; source < cells; ++source) {
        const int c = static_cast<int>(source) / M;
        const int x = static_cast<int>(source) % M;
        for (int to = 0; to < M; ++to) {
            auto next = counter_step(spec, counters_[c], x, to, cap);
            if (!next) continue;
            const int nc = counter_index(*next);
            if (nc < 0) continue;
            out_edges_.push_back({static_cast<std::int32_t>(source), nc * M + to});
        }
        out_offsets_[source + 1] = out_edges_.size();
    }

    // counting sort by target keeps each bucket ordered by source
    in_offsets_.assign(cells + 1, 0);
    for (const auto& e : out_edges_) ++in_offsets_[e.target + 1];
    for (std::size_t i = 0; i < cells; ++i) in_offsets_[i + 1] += in_offsets_[i];
    in_edges_.resize(out_edges_.size());
    std::vector<std::size_t> fill(in_offsets_.begin(), in_offsets_.end() - 1);
    for (const auto& e : out_edges_) in_edges_[fill[e.target]++] = e;
}

int AugmentedSpace::counter_index(CounterState s) const {
    if (counters_.empty()) return -1;
    const int lo = counters_.front().count;
    const int hi = counters_.back().count;
    const int flags = spec_.tracks_excursions() ? 2 : 1;
    if (s.count < lo || s.count > hi || s.flag < 0 || s.flag >= flags) return -1;
    return (s.count - lo) * flags + s.flag;
}

DpTables augmented_forward(const AugmentedSpace& space, const HmmModel& model,
                           const LogTable& emissions) {
    const int M = space.num_states();
    const std::size_t N = emissions.rows;
    const auto W = space.size();
    const auto log_pi = model.log_initial();
    const auto log_a = model.log_transition();

    DpTables alpha(N, space.num_counters(), M, neg_inf);
    {
        auto first = alpha.row(0);
        for (int x = 0; x < M; ++x) {
            const int cell = space.initial_cell(x);
            if (cell >= 0) first[cell] = log_pi[x] + emissions(0, x);
        }
    }
    for (std::size_t n = 1; n < N; ++n) {
        auto prev = alpha.row(n - 1);
        auto cur = alpha.row(n);
        for (std::size_t t = 0; t < W; ++t) {
            const int to = static_cast<int>(t) % M;
            double top = neg_inf;
            for (const auto& e : space.predecessors(static_cast<int>(t))) {
                top = std::max(top, prev[e.source] + log_a[(e.source % M) * M + to]);
            }
            if (top == neg_inf) continue;
            double acc = 0.0;
            for (const auto& e : space.predecessors(static_cast<int>(t))) {
                acc += std::exp(prev[e.source] + log_a[(e.source % M) * M + to] - top);
            }
            cur[t] = top + std::log(acc) + emissions(n, to);
        }
    }
    return alpha;
}

DpTables augmented_backward(const AugmentedSpace& space, const HmmModel& model,
                            const LogTable& emissions, std::span<const char> terminal) {
    const int M = space.num_states();
    const std::size_t N = emissions.rows;
    const auto W = space.size();
    const auto log_a = model.log_transition();

    DpTables beta(N, space.num_counters(), M, neg_inf);
    {
        auto last = beta.row(N - 1);
        for (std::size_t cell = 0; cell < W; ++cell) {
            if (terminal[cell / M]) last[cell] = 0.0;
        }
    }
    for (std::size_t n = N - 1; n-- > 0;) {
        auto next = beta.row(n + 1);
        auto cur = beta.row(n);
        for (std::size_t s = 0; s < W; ++s) {
            const int from = static_cast<int>(s) % M;
            auto out = space.successors(static_cast<int>(s));
            double top = neg_inf;
            for (const auto& e : out) {
                const int to = e.target % M;
                top = std::max(top, next[e.target] + log_a[from * M + to] + emissions(n + 1, to));
            }
            if (top == neg_inf) continue;
            double acc = 0.0;
            for (const auto& e : out) {
                const int to = e.target % M;
                acc += std::exp(next[e.target] + log_a[from * M + to] + emissions(n + 1, to) - top);
            }
            cur[s] = top + std::log(acc);
        }
    }
    return beta;
}

namespace {

// Ranks the reachable cells of one position. A cell's best prefix is its
// predecessor's prefix followed by its own state, so ordering by
// (predecessor rank, state) orders the prefixes lexicographically.
void assign_ranks(std::span<const double> gamma, const std::int32_t* back, const std::int32_t* prev_rank,
                  int num_states, std::int32_t* rank) {
    std::vector<std::pair<std::int64_t, int>> keys;
    for (std::size_t cell = 0; cell < gamma.size(); ++cell) {
        if (gamma[cell] == neg_inf) continue;
        const std::int64_t head = prev_rank ? prev_rank[back[cell]] : 0;
        keys.emplace_back(head * num_states + static_cast<int>(cell) % num_states, static_cast<int>(cell));
    }
    std::sort(keys.begin(), keys.end());
    for (std::size_t i = 0; i < keys.size(); ++i) rank[keys[i].second] = static_cast<std::int32_t>(i);
}

} // namespace

bool ViterbiTables::better(std::size_t n, int a, int b) const {
    const auto row = gamma.row(n);
    if (b < 0) return row[a] > neg_inf;
    if (const int cmp = compare_scores(row[a], row[b]); cmp != 0) return cmp > 0;
    return rank[n * gamma.width() + a] < rank[n * gamma.width() + b];
}

ViterbiTables augmented_viterbi(const AugmentedSpace& space, const HmmModel& model,
                                const LogTable& emissions) {
    const int M = space.num_states();
    const std::size_t N = emissions.rows;
    const auto W = space.size();
    const auto log_pi = model.log_initial();
    const auto log_a = model.log_transition();

    ViterbiTables out{DpTables(N, space.num_counters(), M, neg_inf),
                      std::vector<std::int32_t>(N * W, -1), std::vector<std::int32_t>(N * W, -1)};
    {
        auto first = out.gamma.row(0);
        for (int x = 0; x < M; ++x) {
            const int cell = space.initial_cell(x);
            if (cell >= 0) first[cell] = log_pi[x] + emissions(0, x);
        }
        assign_ranks(first, nullptr, nullptr, M, out.rank.data());
    }
    for (std::size_t n = 1; n < N; ++n) {
        auto prev = out.gamma.row(n - 1);
        auto cur = out.gamma.row(n);
        const std::int32_t* prev_rank = out.rank.data() + (n - 1) * W;
        std::int32_t* back = out.delta.data() + n * W;
        for (std::size_t t = 0; t < W; ++t) {
            const int to = static_cast<int>(t) % M;
            double best = neg_inf;
            std::int32_t arg = -1;
            for (const auto& e : space.predecessors(static_cast<int>(t))) {
                const double v = prev[e.source] + log_a[(e.source % M) * M + to];
                if (v == neg_inf) continue;
                const int cmp = arg < 0 ? 1 : compare_scores(v, best);
                if (cmp > 0 || (cmp == 0 && prev_rank[e.source] < prev_rank[arg])) {
                    best = v;
                    arg = e.source;
                }
            }
            if (arg < 0) continue;
            cur[t] = best + emissions(n, to);
            if (cur[t] == neg_inf) continue;
            back[t] = arg;
        }
        assign_ranks(cur, back, prev_rank, M, out.rank.data() + n * W);
    }
    return out;
}

StatePath backtrack(const AugmentedSpace& space, const ViterbiTables& tables, int final_cell) {
    const int M = space.num_states();
    const std::size_t N = tables.gamma.length;
    const auto W = space.size();
    StatePath path(N);
    int cell = final_cell;
    path[N - 1] = cell % M;
    for (std::size_t n = N - 1; n > 0; --n) {
        cell = tables.delta[n * W + cell];
        if (cell < 0) throw std::logic_error("backtrack reached an unreachable cell");
        path[n - 1] = cell % M;
    }
    return path;
}

StatePath sample_backward(const AugmentedSpace& space, const HmmModel& model,
                          const DpTables& alpha, std::span<const char> terminal, Rng& rng) {
    const int M = space.num_states();
    const std::size_t N = alpha.length;
    const auto W = space.size();
    const auto log_a = model.log_transition();

    std::vector<double> weights(W, neg_inf);
    auto last = alpha.row(N - 1);
    for (std::size_t cell = 0; cell < W; ++cell) {
        if (terminal[cell / M]) weights[cell] = last[cell];
    }
    int cell = sample_log_weights(weights, rng);

    StatePath path(N);
    path[N - 1] = cell % M;
    for (std::size_t n = N - 1; n > 0; --n) {
        auto prev = alpha.row(n - 1);
        auto preds = space.predecessors(cell);
        weights.resize(preds.size());
        const int to = cell % M;
        for (std::size_t i = 0; i < preds.size(); ++i) {
            weights[i] = prev[preds[i].source] + log_a[(preds[i].source % M) * M + to];
        }
        cell = preds[sample_log_weights(weights, rng)].source;
        path[n - 1] = cell % M;
    }
    return path;
}

} // namespace kseg
