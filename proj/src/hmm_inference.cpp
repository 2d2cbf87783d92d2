#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

#include "kseg/errors.hpp"
#include "kseg/hmm.hpp"
#include "kseg/logmath.hpp"

namespace kseg {

ForwardResult forward(const HmmModel& model, const ObsSeq& obs) {
    const LogTable emis = log_emission_table(model, obs);
    const int M = model.num_states();
    const std::size_t N = obs.size();
    const auto log_pi = model.log_initial();
    const auto log_a = model.log_transition();

    ForwardResult out{0.0, LogTable(N, M, neg_inf)};
    for (int m = 0; m < M; ++m) out.alpha(0, m) = log_pi[m] + emis(0, m);

    std::vector<double> terms(M);
    for (std::size_t n = 1; n < N; ++n) {
        for (int to = 0; to < M; ++to) {
            for (int from = 0; from < M; ++from) {
                terms[from] = out.alpha(n - 1, from) + log_a[from * M + to];
            }
            out.alpha(n, to) = log_sum_exp(terms) + emis(n, to);
        }
    }
    out.log_likelihood = log_sum_exp(out.alpha.row(N - 1));
    return out;
}

LogTable backward(const HmmModel& model, const ObsSeq& obs) {
    const LogTable emis = log_emission_table(model, obs);
    const int M = model.num_states();
    const std::size_t N = obs.size();
    const auto log_a = model.log_transition();

    LogTable beta(N, M, 0.0);
    std::vector<double> terms(M);
    for (std::size_t n = N - 1; n-- > 0;) {
        for (int from = 0; from < M; ++from) {
            for (int to = 0; to < M; ++to) {
                terms[to] = log_a[from * M + to] + emis(n + 1, to) + beta(n + 1, to);
            }
            beta(n, from) = log_sum_exp(terms);
        }
    }
    return beta;
}

Decoded viterbi(const HmmModel& model, const ObsSeq& obs) {
    const LogTable emis = log_emission_table(model, obs);
    const int M = model.num_states();
    const std::size_t N = obs.size();
    const auto log_pi = model.log_initial();
    const auto log_a = model.log_transition();

    // rank(n, m) orders the best prefixes ending in m at position n
    LogTable score(N, M, neg_inf);
    std::vector<int> back(N * M, -1);
    std::vector<int> rank(N * M, 0);
    std::vector<std::pair<long long, int>> keys(M);
    auto rerank = [&](std::size_t n) {
        for (int m = 0; m < M; ++m) {
            const long long head = n == 0 || back[n * M + m] < 0 ? 0 : rank[(n - 1) * M + back[n * M + m]];
            keys[m] = {head * M + m, m};
        }
        std::sort(keys.begin(), keys.end());
        for (int i = 0; i < M; ++i) rank[n * M + keys[i].second] = i;
    };
    for (int m = 0; m < M; ++m) score(0, m) = log_pi[m] + emis(0, m);
    rerank(0);
    for (std::size_t n = 1; n < N; ++n) {
        for (int to = 0; to < M; ++to) {
            double best = neg_inf;
            int arg = -1;
            for (int from = 0; from < M; ++from) {
                const double v = score(n - 1, from) + log_a[from * M + to];
                if (v == neg_inf) continue;
                const int cmp = arg < 0 ? 1 : compare_scores(v, best);
                if (cmp > 0 || (cmp == 0 && rank[(n - 1) * M + from] < rank[(n - 1) * M + arg])) {
                    best = v;
                    arg = from;
                }
            }
            score(n, to) = best + emis(n, to);
            back[n * M + to] = arg;
        }
        rerank(n);
    }

    Decoded out;
    out.path.assign(N, 0);
    double best = neg_inf;
    int arg = -1;
    for (int m = 0; m < M; ++m) {
        const double v = score(N - 1, m);
        if (v == neg_inf) continue;
        const int cmp = arg < 0 ? 1 : compare_scores(v, best);
        if (cmp > 0 || (cmp == 0 && rank[(N - 1) * M + m] < rank[(N - 1) * M + arg])) {
            best = v;
            arg = m;
        }
    }
    if (arg < 0) throw ZeroProbabilityEvent("observations have zero likelihood under the model", 0.0);
    out.log_joint = best;
    out.path[N - 1] = arg;
    for (std::size_t n = N - 1; n > 0; --n) out.path[n - 1] = back[n * M + out.path[n]];
    return out;
}

StatePath ffbs_sample(const HmmModel& model, const ObsSeq& obs, Rng& rng) {
    const ForwardResult fw = forward(model, obs);
    if (fw.log_likelihood == neg_inf) {
        throw ZeroProbabilityEvent("observations have zero probability under the model", 0.0);
    }
    const int M = model.num_states();
    const std::size_t N = obs.size();
    const auto log_a = model.log_transition();

    StatePath path(N);
    path[N - 1] = sample_log_weights(fw.alpha.row(N - 1), rng);
    std::vector<double> w(M);
    for (std::size_t n = N - 1; n > 0; --n) {
        for (int from = 0; from < M; ++from) {
            w[from] = fw.alpha(n - 1, from) + log_a[from * M + path[n]];
        }
        path[n - 1] = sample_log_weights(w, rng);
    }
    return path;
}

PosteriorMarginals posterior_marginals(const HmmModel& model, const ObsSeq& obs) {
    const ForwardResult fw = forward(model, obs);
    if (fw.log_likelihood == neg_inf) {
        throw ZeroProbabilityEvent("observations have zero probability under the model", 0.0);
    }
    const LogTable beta = backward(model, obs);
    const LogTable emis = log_emission_table(model, obs);
    const int M = model.num_states();
    const std::size_t N = obs.size();
    const auto log_a = model.log_transition();
    const double z = fw.log_likelihood;

    PosteriorMarginals out;
    out.length = N;
    out.num_states = M;
    out.log_normalizer = z;
    out.site.assign(N * M, 0.0);
    out.pair.assign((N - 1) * M * M, 0.0);
    for (std::size_t n = 0; n < N; ++n) {
        for (int m = 0; m < M; ++m) out.site[n * M + m] = std::exp(fw.alpha(n, m) + beta(n, m) - z);
    }
    for (std::size_t n = 0; n + 1 < N; ++n) {
        for (int from = 0; from < M; ++from) {
            for (int to = 0; to < M; ++to) {
                out.pair[(n * M + from) * M + to] = std::exp(
                    fw.alpha(n, from) + log_a[from * M + to] + emis(n + 1, to) + beta(n + 1, to) - z);
            }
        }
    }
    return out;
}

Simulation simulate(const HmmModel& model, std::size_t length, Rng& rng) {
    if (length < 1) throw InvalidInput("simulation length must be at least 1");
    const int M = model.num_states();
    StatePath path(length);
    path[0] = sample_weights(model.initial(), rng);
    std::vector<double> row(M);
    for (std::size_t n = 1; n < length; ++n) {
        for (int to = 0; to < M; ++to) row[to] = model.transition(path[n - 1], to);
        path[n] = sample_weights(row, rng);
    }

    if (model.family() == EmissionFamily::gaussian) {
        std::vector<double> ys(length);
        std::normal_distribution<double> std_normal(0.0, 1.0);
        for (std::size_t n = 0; n < length; ++n) {
            const auto& g = std::get<Gaussian>(model.emission(path[n]));
            ys[n] = g.mean + std::sqrt(g.variance) * std_normal(rng);
        }
        return {std::move(path), ObsSeq::reals(std::move(ys))};
    }
    std::vector<int> ys(length);
    for (std::size_t n = 0; n < length; ++n) {
        ys[n] = sample_weights(std::get<Categorical>(model.emission(path[n])).probs, rng);
    }
    return {std::move(path), ObsSeq::symbols(std::move(ys))};
}

} // namespace kseg
