#include <algorithm>
#include <string>

#include "kseg/counting.hpp"
#include "kseg/errors.hpp"

namespace kseg {

namespace {

std::vector<bool> null_membership(const std::vector<int>& null_set, int num_states) {
    if (num_states < 2) throw InvalidInput("excursions need at least two states");
    std::vector<bool> member(num_states, false);
    for (int s : null_set) {
        if (s < 0 || s >= num_states) throw InvalidInput("null-set state out of range");
        member[s] = true;
    }
    const auto size = std::count(member.begin(), member.end(), true);
    if (size == 0 || size == num_states) {
        throw InvalidInput("null set must be a non-empty proper subset of the states");
    }
    return member;
}

} // namespace

CountingSpec CountingSpec::standard() { return CountingSpec{}; }

CountingSpec CountingSpec::generalized(std::vector<int> mu, std::vector<std::vector<int>> counted) {
    const auto M = mu.size();
    if (M == 0) throw InvalidInput("generalized counting needs a non-empty mu");
    if (counted.size() != M) throw InvalidInput("C must be M x M with M = size of mu");
    for (int v : mu) {
        if (v != 0 && v != 1) throw InvalidInput("mu entries must be 0 or 1");
    }
    for (std::size_t i = 0; i < M; ++i) {
        if (counted[i].size() != M) throw InvalidInput("C must be square");
        for (int v : counted[i]) {
            if (v != 0 && v != 1) throw InvalidInput("C entries must be 0 or 1");
        }
        if (counted[i][i] != 0) throw InvalidInput("C must have a zero diagonal");
    }
    CountingSpec spec;
    spec.mode_ = CountingMode::generalized;
    spec.num_states_ = static_cast<int>(M);
    spec.mu_ = std::move(mu);
    spec.counted_ = std::move(counted);
    return spec;
}

CountingSpec CountingSpec::excursion(std::vector<int> null_set, int num_states) {
    CountingSpec spec;
    spec.mode_ = CountingMode::excursion;
    spec.num_states_ = num_states;
    spec.null_ = null_membership(null_set, num_states);
    return spec;
}

CountingSpec CountingSpec::restricted_excursion(std::vector<int> null_set, int num_states) {
    CountingSpec spec = excursion(std::move(null_set), num_states);
    spec.mode_ = CountingMode::restricted_excursion;
    return spec;
}

CountingSpec CountingSpec::with_absorption(int k) const {
    if (k < 0) throw InvalidInput("absorbing threshold must be non-negative");
    CountingSpec spec = *this;
    spec.absorb_at_ = k;
    return spec;
}

CountingSpec CountingSpec::without_absorption() const {
    CountingSpec spec = *this;
    spec.absorb_at_.reset();
    return spec;
}

void CountingSpec::check_states(int num_states) const {
    if (num_states_ != 0 && num_states_ != num_states) {
        throw InvalidInput("counting spec is sized for " + std::to_string(num_states_) +
                           " states but the model has " + std::to_string(num_states));
    }
}

int CountingSpec::counts_initial(int state) const {
    switch (mode_) {
    case CountingMode::standard: return 1;
    case CountingMode::generalized: return mu_[state];
    default: return 0;
    }
}

int CountingSpec::counts_transition(int from, int to) const {
    switch (mode_) {
    case CountingMode::standard: return from != to ? 1 : 0;
    case CountingMode::generalized: return counted_[from][to];
    default: return 0;
    }
}

bool CountingSpec::is_null(int state) const { return !null_.empty() && null_[state]; }

int CountingSpec::min_count() const {
    if (mode_ == CountingMode::standard) return 1;
    if (mode_ == CountingMode::generalized) {
        return std::all_of(mu_.begin(), mu_.end(), [](int v) { return v == 1; }) ? 1 : 0;
    }
    return 0;
}

int CountingSpec::max_attainable_count(std::size_t length) const {
    const int N = static_cast<int>(length);
    switch (mode_) {
    case CountingMode::standard: return N;
    case CountingMode::generalized: {
        const bool any_mu = std::any_of(mu_.begin(), mu_.end(), [](int v) { return v == 1; });
        bool any_c = false;
        for (const auto& row : counted_) any_c = any_c || std::any_of(row.begin(), row.end(), [](int v) { return v == 1; });
        return (any_mu ? 1 : 0) + (any_c ? N - 1 : 0);
    }
    default: return (N - 1) / 2;
    }
}

std::vector<int> CountingSpec::null_set() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < null_.size(); ++i) {
        if (null_[i]) out.push_back(static_cast<int>(i));
    }
    return out;
}

CounterState counter_init(const CountingSpec& spec, int first_state) {
    return CounterState{spec.counts_initial(first_state), 0};
}

CounterStep counter_step(const CountingSpec& spec, CounterState prev, int prev_state,
                         int cur_state, std::optional<int> k_max) {
    CounterState next = prev;
    bool increment = false;
    if (spec.tracks_excursions()) {
        const bool was_null = spec.is_null(prev_state);
        const bool now_null = spec.is_null(cur_state);
        if (was_null && !now_null) {
            next.flag = 1;
        } else if (!was_null && now_null) {
            next.flag = 0;
        } else if (spec.mode() == CountingMode::restricted_excursion && prev.flag == 1 &&
                   prev_state != cur_state) {
            // the excursion phase would have to leave {0, 1}
            return std::nullopt;
        }
        increment = prev.flag == 1 && next.flag == 0;
    } else {
        increment = spec.counts_transition(prev_state, cur_state) == 1;
    }

    if (increment) {
        if (auto k = spec.absorb_at()) {
            if (prev.count <= *k) ++next.count;
        } else {
            ++next.count;
            if (k_max && next.count > *k_max) return std::nullopt;
        }
    }
    return next;
}

std::optional<int> count_segments(std::span<const int> path, const CountingSpec& spec) {
    if (path.empty()) throw InvalidInput("cannot count segments of an empty path");
    CounterState state = counter_init(spec, path[0]);
    for (std::size_t n = 1; n < path.size(); ++n) {
        auto next = counter_step(spec, state, path[n - 1], path[n]);
        if (!next) return std::nullopt;
        state = *next;
    }
    return state.count;
}

std::vector<CounterState> counter_state_space(const CountingSpec& spec, int k_max) {
    if (k_max < 0) throw InvalidInput("k_max must be non-negative");
    const int lo = spec.min_count();
    const int hi = spec.absorb_at() ? *spec.absorb_at() + 1 : k_max;
    const int flags = spec.tracks_excursions() ? 2 : 1;
    std::vector<CounterState> out;
    for (int s = lo; s <= hi; ++s) {
        for (int e = 0; e < flags; ++e) out.push_back({s, e});
    }
    return out;
}

} // namespace kseg
