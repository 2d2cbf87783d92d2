#ifndef KSEG_HMM_HPP
#define KSEG_HMM_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "kseg/random.hpp"

namespace kseg {

struct Gaussian {
    double mean = 0.0;
    double variance = 1.0;
};

struct Categorical {
    std::vector<double> probs;
};

using EmissionDist = std::variant<Gaussian, Categorical>;

enum class EmissionFamily { gaussian, categorical };

/// A categorical observation; keeps symbol indices from being confused with
/// real-valued observations at call sites.
struct Symbol {
    int index = 0;
};

using Observation = std::variant<double, Symbol>;

/// Hidden state sequence, 0-indexed states.
using StatePath = std::vector<int>;

/// Observed sequence of length N >= 1, either all reals or all symbols.
class ObsSeq {
public:
    static ObsSeq reals(std::vector<double> values);
    static ObsSeq symbols(std::vector<int> values);

    EmissionFamily family() const noexcept;
    std::size_t size() const noexcept;

    std::span<const double> real_values() const;
    std::span<const int> symbol_values() const;
    Observation operator[](std::size_t n) const;

private:
    explicit ObsSeq(std::variant<std::vector<double>, std::vector<int>> values)
        : values_(std::move(values)) {}

    std::variant<std::vector<double>, std::vector<int>> values_;
};

/// Row-major table of log values; `rows` positions by `width` cells.
struct LogTable {
    std::size_t rows = 0;
    std::size_t width = 0;
    std::vector<double> values;

    LogTable() = default;
    LogTable(std::size_t rows, std::size_t width, double fill);

    double operator()(std::size_t r, std::size_t c) const { return values[r * width + c]; }
    double& operator()(std::size_t r, std::size_t c) { return values[r * width + c]; }
    std::span<const double> row(std::size_t r) const { return {values.data() + r * width, width}; }
    std::span<double> row(std::size_t r) { return {values.data() + r * width, width}; }
};

/// Immutable HMM: initial distribution, row-stochastic transition matrix and
/// one emission distribution per state. Validated on construction.
class HmmModel {
public:
    HmmModel(std::vector<double> initial,
             std::vector<std::vector<double>> transition,
             std::vector<EmissionDist> emissions);

    int num_states() const noexcept { return num_states_; }
    EmissionFamily family() const noexcept { return family_; }
    /// Vocabulary size of a categorical model, 0 for Gaussian.
    int vocabulary_size() const noexcept { return vocabulary_; }

    double initial(int state) const { return initial_[state]; }
    std::span<const double> initial() const noexcept { return initial_; }
    double transition(int from, int to) const { return transition_[from * num_states_ + to]; }
    std::vector<std::vector<double>> transition_rows() const;
    const EmissionDist& emission(int state) const { return emissions_[state]; }
    std::span<const EmissionDist> emissions() const noexcept { return emissions_; }

    /// Throws InvalidInput when the sequence does not belong to this model's
    /// observation domain.
    void check_compatible(const ObsSeq& obs) const;

    std::vector<double> log_initial() const;
    /// Row-major M x M log transition matrix.
    std::vector<double> log_transition() const;

private:
    int num_states_ = 0;
    EmissionFamily family_ = EmissionFamily::gaussian;
    int vocabulary_ = 0;
    std::vector<double> initial_;
    std::vector<double> transition_;
    std::vector<EmissionDist> emissions_;
};

double log_emission(const HmmModel& model, int state, Observation obs);

/// N x M table of log p(y_n | x_n = m).
LogTable log_emission_table(const HmmModel& model, const ObsSeq& obs);

struct ForwardResult {
    double log_likelihood = 0.0;
    LogTable alpha; ///< N x M, log p(x_n, y_1..y_n)
};

ForwardResult forward(const HmmModel& model, const ObsSeq& obs);

/// N x M, log p(y_{n+1}..y_N | x_n); last row zero.
LogTable backward(const HmmModel& model, const ObsSeq& obs);

struct Decoded {
    StatePath path;
    double log_joint = 0.0; ///< log p(y | x) + log p(x)
};

/// MAP path. Among equally probable paths the lexicographically smallest one
/// is returned, which for a single position is the lowest state index.
Decoded viterbi(const HmmModel& model, const ObsSeq& obs);

/// Exact draw from p(x | y).
StatePath ffbs_sample(const HmmModel& model, const ObsSeq& obs, Rng& rng);

/// Single-site and pairwise posterior marginals.
struct PosteriorMarginals {
    std::size_t length = 0;
    int num_states = 0;
    std::vector<double> site; ///< N x M
    std::vector<double> pair; ///< (N-1) x M x M, [n][from][to] for positions n, n+1
    /// Log normalizer of the posterior the marginals were taken under.
    double log_normalizer = 0.0;

    double site_at(std::size_t n, int m) const { return site[n * num_states + m]; }
    double pair_at(std::size_t n, int from, int to) const {
        return pair[(n * num_states + from) * num_states + to];
    }
};

PosteriorMarginals posterior_marginals(const HmmModel& model, const ObsSeq& obs);

struct EmOptions {
    int max_iterations = 500;
    double relative_tolerance = 1e-6;
    double variance_floor = 1e-6;
    /// States whose emission distribution is held fixed during M-steps.
    std::vector<int> fixed_emissions;
};

struct EmResult {
    HmmModel model;
    /// Objective at each visited parameter value; the last entry belongs to
    /// the returned model.
    std::vector<double> loglik_trace;
};

/// Baum-Welch re-estimation from posterior marginals. Categorical emissions
/// use add-one smoothing; Gaussian variances are floored.
HmmModel maximization_step(const HmmModel& current, const ObsSeq& obs,
                           const PosteriorMarginals& marginals, const EmOptions& opts);

/// Log-density of the Dirichlet(2) smoothing prior implied by the add-one
/// categorical update (up to a constant). Zero for Gaussian models.
double emission_smoothing_log_prior(const HmmModel& model);

EmResult em_fit(const HmmModel& init, const ObsSeq& obs, const EmOptions& opts = {});

/// Deterministic starting point: uniform initial distribution, 0.9 on the
/// transition diagonal, Gaussian means at evenly spaced data quantiles.
HmmModel default_init(const ObsSeq& obs, int num_states, int vocabulary_size = 0);

/// Best of `starts` EM runs by final objective. The first run starts from
/// default_init; the others keep its initial and transition guesses but draw
/// emissions at random (Gaussian means at random data points, categorical
/// rows from a flat Dirichlet).
EmResult em_fit_restarts(const ObsSeq& obs, int num_states, int starts, Rng& rng, const EmOptions& opts = {},
                         int vocabulary_size = 0);

struct Simulation {
    StatePath path;
    ObsSeq observations;
};

Simulation simulate(const HmmModel& model, std::size_t length, Rng& rng);

} // namespace kseg

#endif
