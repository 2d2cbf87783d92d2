#include <cmath>
#include <numbers>
#include <sstream>

#include "kseg/errors.hpp"
#include "kseg/hmm.hpp"
#include "kseg/logmath.hpp"

namespace kseg {

namespace {

constexpr double kSumTolerance = 1e-12;

void check_distribution(std::span<const double> probs, const char* what) {
    double total = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0) || !std::isfinite(p)) {
            throw InvalidInput(std::string(what) + " has a negative or non-finite entry");
        }
        total += p;
    }
    if (std::abs(total - 1.0) > kSumTolerance) {
        std::ostringstream msg;
        msg.precision(17);
        msg << what << " sums to " << total << ", expected 1";
        throw InvalidInput(msg.str());
    }
}

} // namespace

ObsSeq ObsSeq::reals(std::vector<double> values) {
    if (values.empty()) throw InvalidInput("observation sequence is empty");
    for (double v : values) {
        if (!std::isfinite(v)) throw InvalidInput("observation is not finite");
    }
    return ObsSeq(std::move(values));
}

ObsSeq ObsSeq::symbols(std::vector<int> values) {
    if (values.empty()) throw InvalidInput("observation sequence is empty");
    for (int v : values) {
        if (v < 0) throw InvalidInput("negative symbol index");
    }
    return ObsSeq(std::move(values));
}

EmissionFamily ObsSeq::family() const noexcept {
    return values_.index() == 0 ? EmissionFamily::gaussian : EmissionFamily::categorical;
}

std::size_t ObsSeq::size() const noexcept {
    return std::visit([](const auto& v) { return v.size(); }, values_);
}

std::span<const double> ObsSeq::real_values() const {
    if (auto* v = std::get_if<std::vector<double>>(&values_)) return *v;
    throw InvalidInput("observation sequence holds symbols, not reals");
}

std::span<const int> ObsSeq::symbol_values() const {
    if (auto* v = std::get_if<std::vector<int>>(&values_)) return *v;
    throw InvalidInput("observation sequence holds reals, not symbols");
}

Observation ObsSeq::operator[](std::size_t n) const {
    if (auto* v = std::get_if<std::vector<double>>(&values_)) return (*v)[n];
    return Symbol{std::get<std::vector<int>>(values_)[n]};
}

LogTable::LogTable(std::size_t rows_, std::size_t width_, double fill)
    : rows(rows_), width(width_), values(rows_ * width_, fill) {}

HmmModel::HmmModel(std::vector<double> initial,
                   std::vector<std::vector<double>> transition,
                   std::vector<EmissionDist> emissions)
    : num_states_(static_cast<int>(initial.size())),
      initial_(std::move(initial)),
      emissions_(std::move(emissions)) {
    if (num_states_ < 1) throw InvalidInput("model needs at least one state");
    check_distribution(initial_, "initial distribution");
    if (transition.size() != initial_.size()) {
        throw InvalidInput("transition matrix must have one row per state");
    }
    transition_.reserve(initial_.size() * initial_.size());
    for (const auto& row : transition) {
        if (row.size() != initial_.size()) throw InvalidInput("transition matrix must be square");
        check_distribution(row, "transition row");
        transition_.insert(transition_.end(), row.begin(), row.end());
    }
    if (emissions_.size() != initial_.size()) {
        throw InvalidInput("model needs one emission distribution per state");
    }
    family_ = std::holds_alternative<Gaussian>(emissions_.front()) ? EmissionFamily::gaussian
                                                                    : EmissionFamily::categorical;
    for (const auto& e : emissions_) {
        if (auto* g = std::get_if<Gaussian>(&e)) {
            if (family_ != EmissionFamily::gaussian) throw InvalidInput("mixed emission families");
            if (!(g->variance > 0.0) || !std::isfinite(g->variance) || !std::isfinite(g->mean)) {
                throw InvalidInput("Gaussian emission needs a finite mean and positive variance");
            }
        } else {
            const auto& c = std::get<Categorical>(e);
            if (family_ != EmissionFamily::categorical) throw InvalidInput("mixed emission families");
            if (c.probs.empty()) throw InvalidInput("categorical emission has an empty vocabulary");
            if (vocabulary_ == 0) vocabulary_ = static_cast<int>(c.probs.size());
            if (static_cast<int>(c.probs.size()) != vocabulary_) {
                throw InvalidInput("categorical emissions disagree on vocabulary size");
            }
            check_distribution(c.probs, "categorical emission");
        }
    }
}

std::vector<std::vector<double>> HmmModel::transition_rows() const {
    std::vector<std::vector<double>> rows(num_states_);
    for (int i = 0; i < num_states_; ++i) {
        rows[i].assign(transition_.begin() + i * num_states_,
                       transition_.begin() + (i + 1) * num_states_);
    }
    return rows;
}

void HmmModel::check_compatible(const ObsSeq& obs) const {
    if (obs.family() != family_) {
        throw InvalidInput(family_ == EmissionFamily::gaussian
                               ? "Gaussian model given symbol observations"
                               : "categorical model given real-valued observations");
    }
    if (family_ == EmissionFamily::categorical) {
        for (int s : obs.symbol_values()) {
            if (s >= vocabulary_) throw InvalidInput("symbol index outside the model vocabulary");
        }
    }
}

std::vector<double> HmmModel::log_initial() const {
    std::vector<double> out(initial_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = safe_log(initial_[i]);
    return out;
}

std::vector<double> HmmModel::log_transition() const {
    std::vector<double> out(transition_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = safe_log(transition_[i]);
    return out;
}

double log_emission(const HmmModel& model, int state, Observation obs) {
    if (state < 0 || state >= model.num_states()) throw InvalidInput("state index out of range");
    const EmissionDist& dist = model.emission(state);
    if (auto* g = std::get_if<Gaussian>(&dist)) {
        auto* y = std::get_if<double>(&obs);
        if (!y) throw InvalidInput("symbol observation given to a Gaussian emission");
        double d = *y - g->mean;
        return -0.5 * std::log(2.0 * std::numbers::pi * g->variance) - 0.5 * d * d / g->variance;
    }
    auto* s = std::get_if<Symbol>(&obs);
    if (!s) throw InvalidInput("real observation given to a categorical emission");
    const auto& probs = std::get<Categorical>(dist).probs;
    if (s->index < 0 || s->index >= static_cast<int>(probs.size())) {
        throw InvalidInput("symbol index outside the model vocabulary");
    }
    return safe_log(probs[s->index]);
}

LogTable log_emission_table(const HmmModel& model, const ObsSeq& obs) {
    model.check_compatible(obs);
    const int M = model.num_states();
    LogTable table(obs.size(), M, 0.0);
    if (model.family() == EmissionFamily::gaussian) {
        auto ys = obs.real_values();
        for (int m = 0; m < M; ++m) {
            const auto& g = std::get<Gaussian>(model.emission(m));
            const double norm = -0.5 * std::log(2.0 * std::numbers::pi * g.variance);
            const double inv = 0.5 / g.variance;
            for (std::size_t n = 0; n < ys.size(); ++n) {
                double d = ys[n] - g.mean;
                table(n, m) = norm - d * d * inv;
            }
        }
    } else {
        auto ys = obs.symbol_values();
        for (int m = 0; m < M; ++m) {
            const auto& probs = std::get<Categorical>(model.emission(m)).probs;
            for (std::size_t n = 0; n < ys.size(); ++n) table(n, m) = safe_log(probs[ys[n]]);
        }
    }
    return table;
}

int sample_log_weights(std::span<const double> log_weights, Rng& rng) {
    double top = neg_inf;
    for (double w : log_weights) top = std::max(top, w);
    if (top == neg_inf) throw InvalidInput("cannot sample from an all-zero weight vector");
    double total = 0.0;
    for (double w : log_weights) total += std::exp(w - top);
    std::uniform_real_distribution<double> unif(0.0, total);
    double u = unif(rng);
    double acc = 0.0;
    int last = -1;
    for (std::size_t i = 0; i < log_weights.size(); ++i) {
        if (log_weights[i] == neg_inf) continue;
        acc += std::exp(log_weights[i] - top);
        last = static_cast<int>(i);
        if (u < acc) return last;
    }
    return last;
}

int sample_weights(std::span<const double> weights, Rng& rng) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) throw InvalidInput("cannot sample from an all-zero weight vector");
    std::uniform_real_distribution<double> unif(0.0, total);
    double u = unif(rng);
    double acc = 0.0;
    int last = -1;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0) continue;
        acc += weights[i];
        last = static_cast<int>(i);
        if (u < acc) return last;
    }
    return last;
}

} // namespace kseg
