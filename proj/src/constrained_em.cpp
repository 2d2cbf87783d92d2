#include <cmath>

#include "kseg/errors.hpp"
#include "kseg/learning.hpp"
#include "kseg/logmath.hpp"

namespace kseg {

PosteriorMarginals constrained_marginals(const HmmModel& model, const ObsSeq& obs,
                                         const CountingSpec& spec, const SegmentConstraint& constraint) {
    const int M = model.num_states();
    const std::size_t N = obs.size();
    const EventChain chain = event_chain(spec, constraint, M, N);
    if (chain.empty()) {
        throw ZeroProbabilityEvent("constraint " + constraint.to_string() + " is unattainable", 0.0);
    }
    const LogTable emis = log_emission_table(model, obs);
    const DpTables alpha = augmented_forward(chain.space, model, emis);
    const DpTables beta = augmented_backward(chain.space, model, emis, chain.terminal);
    const auto log_a = model.log_transition();

    double z = neg_inf;
    {
        auto last = alpha.row(N - 1);
        for (std::size_t cell = 0; cell < last.size(); ++cell) {
            if (chain.terminal[cell / M]) z = log_add_exp(z, last[cell]);
        }
    }
    if (z == neg_inf) {
        throw ZeroProbabilityEvent("constraint " + constraint.to_string() + " has posterior probability 0", 0.0);
    }

    PosteriorMarginals out;
    out.length = N;
    out.num_states = M;
    out.log_normalizer = z;
    out.site.assign(N * M, 0.0);
    out.pair.assign((N - 1) * M * M, 0.0);
    const auto W = chain.space.size();
    for (std::size_t n = 0; n < N; ++n) {
        auto a = alpha.row(n);
        auto b = beta.row(n);
        for (std::size_t cell = 0; cell < W; ++cell) {
            const double v = a[cell] + b[cell];
            if (v > neg_inf) out.site[n * M + cell % M] += std::exp(v - z);
        }
    }
    for (std::size_t n = 0; n + 1 < N; ++n) {
        auto a = alpha.row(n);
        auto b = beta.row(n + 1);
        for (std::size_t src = 0; src < W; ++src) {
            if (a[src] == neg_inf) continue;
            const int from = static_cast<int>(src) % M;
            for (const auto& e : chain.space.successors(static_cast<int>(src))) {
                const int to = e.target % M;
                const double v = a[src] + log_a[from * M + to] + emis(n + 1, to) + b[e.target];
                if (v > neg_inf) out.pair[(n * M + from) * M + to] += std::exp(v - z);
            }
        }
    }
    return out;
}

ConstrainedFitResult constrained_em(const HmmModel& init, const ObsSeq& obs, const CountingSpec& spec,
                                    const SegmentConstraint& constraint, const EmOptions& opts) {
    if (opts.max_iterations < 1) throw InvalidInput("EM needs at least one iteration");
    init.check_compatible(obs);
    HmmModel model = init;
    std::vector<double> trace;
    for (int iter = 0;; ++iter) {
        PosteriorMarginals post = [&] {
            try {
                return constrained_marginals(model, obs, spec, constraint);
            } catch (const ZeroProbabilityEvent& e) {
                if (iter > 0) throw;
                throw ZeroProbabilityEvent(std::string(e.what()) +
                                               " under the initial parameters; choose a different k or initialization",
                                           0.0);
            }
        }();
        const double objective = post.log_normalizer + emission_smoothing_log_prior(model);
        trace.push_back(objective);
        if (trace.size() >= 2) {
            const double prev = trace[trace.size() - 2];
            if (std::abs(objective - prev) <= opts.relative_tolerance * std::abs(prev)) break;
        }
        if (iter + 1 >= opts.max_iterations) break;
        model = maximization_step(model, obs, post, opts);
    }
    auto path = kseg_map(model, obs, spec, constraint);
    return {std::move(model), std::move(trace), std::move(path)};
}

} // namespace kseg
