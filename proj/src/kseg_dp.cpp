#include <algorithm>
#include <charconv>
#include <cmath>

#include "kseg/errors.hpp"
#include "kseg/kseg_dp.hpp"
#include "kseg/logmath.hpp"

namespace kseg {

namespace {

void check_count(int k) {
    if (k < 0) throw InvalidInput("segment counts must be non-negative");
}

int parse_int(std::string_view text, std::string_view whole) {
    int value = 0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end || text.empty()) {
        throw InvalidInput("malformed constraint '" + std::string(whole) + "'");
    }
    return value;
}

struct LastRowGroups {
    std::vector<int> counts;          // distinct counter values, ascending
    std::vector<double> log_joint;    // logsumexp over flags and states
    std::vector<int> best_cell;       // argmax cell, -1 if infeasible
};

LastRowGroups group_last_row(const AugmentedSpace& space, std::span<const double> last,
                             const ViterbiTables* tables) {
    const int M = space.num_states();
    LastRowGroups out;
    for (int c = 0; c < space.num_counters(); ++c) {
        const int count = space.counter(c).count;
        if (out.counts.empty() || out.counts.back() != count) {
            out.counts.push_back(count);
            out.log_joint.push_back(neg_inf);
            out.best_cell.push_back(-1);
        }
        for (int x = 0; x < M; ++x) {
            const int cell = c * M + x;
            out.log_joint.back() = log_add_exp(out.log_joint.back(), last[cell]);
            if (tables && tables->better(tables->gamma.length - 1, cell, out.best_cell.back())) {
                out.best_cell.back() = cell;
            }
        }
    }
    return out;
}

} // namespace

SegmentConstraint SegmentConstraint::exactly(int k) {
    check_count(k);
    return {Kind::exactly, k, k};
}

SegmentConstraint SegmentConstraint::at_most(int k) {
    check_count(k);
    return {Kind::at_most, 0, k};
}

SegmentConstraint SegmentConstraint::range(int k1, int k2) {
    check_count(k1);
    if (k2 <= k1) throw InvalidInput("range constraint needs k1 < k2");
    return {Kind::range, k1, k2};
}

SegmentConstraint SegmentConstraint::greater_than(int k) {
    check_count(k);
    return {Kind::greater_than, k, k};
}

SegmentConstraint SegmentConstraint::parse(std::string_view text) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) {
        throw InvalidInput("malformed constraint '" + std::string(text) + "'");
    }
    const auto head = text.substr(0, colon);
    const auto rest = text.substr(colon + 1);
    if (head == "range") {
        const auto second = rest.find(':');
        if (second == std::string_view::npos) {
            throw InvalidInput("malformed constraint '" + std::string(text) + "'");
        }
        return range(parse_int(rest.substr(0, second), text), parse_int(rest.substr(second + 1), text));
    }
    const int k = parse_int(rest, text);
    if (head == "exact") return exactly(k);
    if (head == "atmost") return at_most(k);
    if (head == "greater") return greater_than(k);
    throw InvalidInput("unknown constraint kind '" + std::string(head) + "'");
}

bool SegmentConstraint::admits(int count) const noexcept {
    switch (kind_) {
    case Kind::exactly: return count == lo_;
    case Kind::at_most: return count <= hi_;
    case Kind::range: return count >= lo_ && count <= hi_;
    case Kind::greater_than: return count > lo_;
    }
    return false;
}

std::string SegmentConstraint::to_string() const {
    switch (kind_) {
    case Kind::exactly: return "exact:" + std::to_string(lo_);
    case Kind::at_most: return "atmost:" + std::to_string(hi_);
    case Kind::range: return "range:" + std::to_string(lo_) + ":" + std::to_string(hi_);
    case Kind::greater_than: return "greater:" + std::to_string(lo_);
    }
    return {};
}

bool EventChain::empty() const {
    return std::none_of(terminal.begin(), terminal.end(), [](char t) { return t != 0; });
}

EventChain event_chain(const CountingSpec& spec, const SegmentConstraint& constraint,
                       int num_states, std::size_t length) {
    const CountingSpec base = spec.without_absorption();
    const int lo = base.min_count();
    // counts above the attainable maximum cannot occur, so the cap is clamped
    const int top = std::max(lo, base.max_attainable_count(length));
    auto make = [&](const CountingSpec& chain_spec, int cap) {
        AugmentedSpace space(chain_spec, num_states, cap);
        std::vector<char> terminal(space.num_counters());
        for (int c = 0; c < space.num_counters(); ++c) {
            terminal[c] = constraint.admits(space.counter(c).count) ? 1 : 0;
        }
        return EventChain{std::move(space), std::move(terminal)};
    };
    if (constraint.kind() == SegmentConstraint::Kind::greater_than) {
        return make(base.with_absorption(std::min(constraint.lower(), top)), 0);
    }
    return make(base, std::clamp(constraint.upper(), lo, top));
}

double KsegForward::log_joint(int k) const {
    const int i = k - min_count;
    if (i < 0 || i >= static_cast<int>(log_joint_by_count.size())) return neg_inf;
    return log_joint_by_count[i];
}

KsegForward kseg_forward(const HmmModel& model, const ObsSeq& obs, const CountingSpec& spec, int k_max) {
    const AugmentedSpace space(spec, model.num_states(), k_max);
    const LogTable emis = log_emission_table(model, obs);
    KsegForward out;
    out.alpha = augmented_forward(space, model, emis);
    auto last = out.alpha.row(obs.size() - 1);
    auto groups = group_last_row(space, last, nullptr);
    out.min_count = groups.counts.front();
    out.log_joint_by_count = std::move(groups.log_joint);
    return out;
}

DpTables kseg_backward(const HmmModel& model, const ObsSeq& obs, const CountingSpec& spec, int k_max) {
    const AugmentedSpace space(spec, model.num_states(), k_max);
    const LogTable emis = log_emission_table(model, obs);
    const std::vector<char> all(space.num_counters(), 1);
    return augmented_backward(space, model, emis, all);
}

const KsegPath* KsegDecoding::find(int count) const {
    for (const auto& e : entries) {
        if (e.count == count) return &e;
    }
    return nullptr;
}

KsegDecoding kseg_viterbi(const HmmModel& model, const ObsSeq& obs, const CountingSpec& spec, int k_max) {
    const AugmentedSpace space(spec, model.num_states(), k_max);
    const LogTable emis = log_emission_table(model, obs);
    const ViterbiTables tables = augmented_viterbi(space, model, emis);
    auto last = tables.gamma.row(obs.size() - 1);
    const auto groups = group_last_row(space, last, &tables);

    KsegDecoding out;
    out.min_count = groups.counts.front();
    for (std::size_t g = 0; g < groups.counts.size(); ++g) {
        KsegPath entry;
        entry.count = groups.counts[g];
        const int cell = groups.best_cell[g];
        if (cell >= 0 && last[cell] > neg_inf) {
            entry.feasible = true;
            entry.log_joint = last[cell];
            entry.path = backtrack(space, tables, cell);
        } else {
            entry.log_joint = neg_inf;
        }
        out.entries.push_back(std::move(entry));
    }
    if (std::none_of(out.entries.begin(), out.entries.end(), [](const KsegPath& e) { return e.feasible; })) {
        out.diagnostic = "no path reaches any count in [" + std::to_string(groups.counts.front()) + ", " +
                         std::to_string(groups.counts.back()) + "]";
    }
    return out;
}

std::optional<Decoded> kseg_map(const HmmModel& model, const ObsSeq& obs, const CountingSpec& spec,
                                const SegmentConstraint& constraint) {
    const EventChain chain = event_chain(spec, constraint, model.num_states(), obs.size());
    if (chain.empty()) return std::nullopt;
    const LogTable emis = log_emission_table(model, obs);
    const ViterbiTables tables = augmented_viterbi(chain.space, model, emis);
    auto last = tables.gamma.row(obs.size() - 1);
    const int M = model.num_states();
    int arg = -1;
    for (std::size_t cell = 0; cell < last.size(); ++cell) {
        if (chain.terminal[cell / M] && tables.better(obs.size() - 1, static_cast<int>(cell), arg)) {
            arg = static_cast<int>(cell);
        }
    }
    if (arg < 0) return std::nullopt;
    return Decoded{backtrack(chain.space, tables, arg), last[arg]};
}

double kseg_log_joint(const HmmModel& model, const ObsSeq& obs, const CountingSpec& spec,
                      const SegmentConstraint& constraint) {
    const EventChain chain = event_chain(spec, constraint, model.num_states(), obs.size());
    if (chain.empty()) return neg_inf;
    const LogTable emis = log_emission_table(model, obs);
    const DpTables alpha = augmented_forward(chain.space, model, emis);
    auto last = alpha.row(obs.size() - 1);
    const int M = model.num_states();
    double total = neg_inf;
    for (std::size_t cell = 0; cell < last.size(); ++cell) {
        if (chain.terminal[cell / M]) total = log_add_exp(total, last[cell]);
    }
    return total;
}

double kseg_prob(const HmmModel& model, const ObsSeq& obs, const CountingSpec& spec,
                 const SegmentConstraint& constraint) {
    const double joint = kseg_log_joint(model, obs, spec, constraint);
    if (joint == neg_inf) return 0.0;
    // An event that admits every path has probability one; the two log sums
    // below would only agree up to roundoff.
    if (spec.mode() != CountingMode::restricted_excursion) {
        const int lo = spec.min_count();
        const int hi = spec.max_attainable_count(obs.size());
        bool covers = true;
        for (int k = lo; k <= hi && covers; ++k) covers = constraint.admits(k);
        if (covers) return 1.0;
    }
    const double evidence = forward(model, obs).log_likelihood;
    return std::min(1.0, std::exp(joint - evidence));
}

std::vector<StatePath> kseg_sample(const HmmModel& model, const ObsSeq& obs, const CountingSpec& spec,
                                   const SegmentConstraint& constraint, std::size_t n, Rng& rng) {
    const EventChain chain = event_chain(spec, constraint, model.num_states(), obs.size());
    const std::string event = constraint.to_string();
    if (chain.empty()) {
        throw ZeroProbabilityEvent("constraint " + event + " is unattainable; probability 0", 0.0);
    }
    const LogTable emis = log_emission_table(model, obs);
    const DpTables alpha = augmented_forward(chain.space, model, emis);
    auto last = alpha.row(obs.size() - 1);
    const int M = model.num_states();
    double total = neg_inf;
    for (std::size_t cell = 0; cell < last.size(); ++cell) {
        if (chain.terminal[cell / M]) total = log_add_exp(total, last[cell]);
    }
    if (total == neg_inf) {
        throw ZeroProbabilityEvent("constraint " + event + " has posterior probability 0", 0.0);
    }
    std::vector<StatePath> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(sample_backward(chain.space, model, alpha, chain.terminal, rng));
    return out;
}

double KsegSummary::total_probability() const {
    double total = 0.0;
    for (const auto& e : entries) total += e.probability;
    return total;
}

KsegSummary kmax_summary(const HmmModel& model, const ObsSeq& obs, const CountingSpec& spec, int k_max) {
    const CountingSpec base = spec.without_absorption();
    if (k_max < base.min_count()) throw InvalidInput("k_max is below the smallest attainable count");
    const AugmentedSpace space(base.with_absorption(k_max), model.num_states(), 0);
    const LogTable emis = log_emission_table(model, obs);
    const DpTables alpha = augmented_forward(space, model, emis);
    const ViterbiTables tables = augmented_viterbi(space, model, emis);
    const auto groups = group_last_row(space, alpha.row(obs.size() - 1), &tables);

    KsegSummary out;
    out.k_max = k_max;
    out.log_evidence = forward(model, obs).log_likelihood;
    auto scores = tables.gamma.row(obs.size() - 1);
    for (std::size_t g = 0; g < groups.counts.size(); ++g) {
        SummaryEntry entry;
        entry.count = groups.counts[g];
        entry.overflow = entry.count > k_max;
        entry.log_joint = groups.log_joint[g];
        entry.probability = entry.log_joint == neg_inf ? 0.0 : std::exp(entry.log_joint - out.log_evidence);
        const int cell = groups.best_cell[g];
        if (cell >= 0 && scores[cell] > neg_inf) {
            entry.path = backtrack(space, tables, cell);
            entry.path_log_joint = scores[cell];
        } else {
            entry.path_log_joint = neg_inf;
        }
        out.entries.push_back(std::move(entry));
    }
    return out;
}

} // namespace kseg
