// Command-line front end. Every command reads a model JSON and an observation
// CSV, runs one library operation and writes its results under --out.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kseg/errors.hpp"
#include "kseg/io.hpp"
#include "kseg/kseg_dp.hpp"
#include "kseg/learning.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace kseg;

namespace {

struct RunConfig {
    std::string command;
    std::string model;
    std::string obs;
    std::string spec;
    std::string constraint;
    std::string out;
    std::string method;
    std::string family = "gaussian";
    std::optional<int> kmax;
    std::optional<std::uint64_t> seed;
    std::optional<long long> n;
    std::optional<int> states;
    int restarts = 1;
    std::vector<int> fixed_emissions;
};

// Raised for missing or contradictory flags; maps to exit code 2 like any
// other InvalidInput.
[[noreturn]] void config_error(const std::string& what) { throw InvalidInput(what); }

const std::string& require(const std::string& value, const char* flag, const RunConfig& cfg) {
    if (value.empty()) config_error(cfg.command + " needs " + flag);
    return value;
}

template <class T>
T require(const std::optional<T>& value, const char* flag, const RunConfig& cfg) {
    if (!value) config_error(cfg.command + " needs " + flag);
    return *value;
}

fs::path out_dir(const RunConfig& cfg) { return require(cfg.out, "--out", cfg); }

HmmModel load_model(const RunConfig& cfg) { return io::read_model(require(cfg.model, "--model", cfg)); }

ObsSeq load_obs(const RunConfig& cfg, EmissionFamily family) {
    return io::read_observations(require(cfg.obs, "--obs", cfg), family);
}

CountingSpec load_spec(const RunConfig& cfg, int num_states) {
    if (cfg.spec.empty()) return CountingSpec::standard();
    return io::read_spec(cfg.spec, num_states);
}

SegmentConstraint load_constraint(const RunConfig& cfg) {
    return SegmentConstraint::parse(require(cfg.constraint, "--constraint", cfg));
}

// Constraint every path satisfies; used when a sampler needs one but the
// user gave none.
SegmentConstraint vacuous_constraint(const CountingSpec& spec, std::size_t length) {
    return SegmentConstraint::at_most(std::max(1, spec.max_attainable_count(length)));
}

std::string trace_csv(const char* column, const std::vector<double>& trace) {
    std::ostringstream out;
    out << "iteration," << column << '\n';
    for (std::size_t i = 0; i < trace.size(); ++i) out << i << ',' << io::format_double(trace[i]) << '\n';
    return out.str();
}

std::string rows_csv(const std::vector<StatePath>& paths) {
    std::ostringstream out;
    for (const auto& p : paths) {
        for (std::size_t n = 0; n < p.size(); ++n) out << (n ? "," : "") << p[n];
        out << '\n';
    }
    return out.str();
}

int cmd_simulate(const RunConfig& cfg) {
    const auto model = load_model(cfg);
    const long long length = require(cfg.n, "--n", cfg);
    if (length < 1) config_error("--n must be at least 1");
    Rng rng(require(cfg.seed, "--seed", cfg));
    const auto dir = out_dir(cfg);
    const auto sim = simulate(model, static_cast<std::size_t>(length), rng);
    io::write_observations(dir / "observations.csv", sim.observations);
    io::write_path(dir / "path.csv", sim.path);
    return 0;
}

int cmd_fit(const RunConfig& cfg) {
    std::optional<HmmModel> init;
    EmissionFamily family = EmissionFamily::gaussian;
    if (!cfg.model.empty()) {
        init = load_model(cfg);
        family = init->family();
    } else if (cfg.family == "categorical") {
        family = EmissionFamily::categorical;
    } else if (cfg.family != "gaussian") {
        config_error("--family must be gaussian or categorical");
    }
    const auto obs = load_obs(cfg, family);
    if (cfg.restarts < 1) config_error("--restarts must be at least 1");
    if (cfg.restarts > 1 && init) config_error("--restarts chooses its own starting points; drop --model");
    if (!init) {
        const int M = require(cfg.states, "--model or --states", cfg);
        init = default_init(obs, M);
    }
    const int M = init->num_states();
    for (int s : cfg.fixed_emissions) {
        if (s < 0 || s >= M) config_error("--fix-emission " + std::to_string(s) + " is not a state index");
    }
    std::string method = cfg.method;
    if (method.empty()) method = cfg.constraint.empty() ? "em" : "constrained";
    const auto dir = out_dir(cfg);

    EmOptions opts;
    opts.fixed_emissions = cfg.fixed_emissions;

    if (cfg.restarts > 1 && method != "em") config_error("--restarts is only available with --method em");

    if (method == "em") {
        if (!cfg.constraint.empty()) config_error("--constraint needs --method constrained or gibbs");
        std::optional<EmResult> restarted;
        if (cfg.restarts > 1) {
            Rng rng(require(cfg.seed, "--seed", cfg));
            restarted = em_fit_restarts(obs, M, cfg.restarts, rng, opts);
        }
        const auto fit = restarted ? std::move(*restarted) : em_fit(*init, obs, opts);
        io::write_model(dir / "model.json", fit.model);
        io::write_text(dir / "trace.csv", trace_csv("loglik", fit.loglik_trace));
        return 0;
    }

    const auto spec = load_spec(cfg, M);
    if (method == "constrained") {
        const auto constraint = load_constraint(cfg);
        const auto fit = constrained_em(*init, obs, spec, constraint, opts);
        io::write_model(dir / "model.json", fit.model);
        io::write_text(dir / "trace.csv", trace_csv("constrained_loglik", fit.constrained_loglik_trace));
        if (fit.final_path) io::write_path(dir / "path.csv", fit.final_path->path);
        return 0;
    }

    if (method == "gibbs") {
        if (!cfg.fixed_emissions.empty()) config_error("--fix-emission is not available with --method gibbs");
        const auto constraint =
            cfg.constraint.empty() ? vacuous_constraint(spec, obs.size()) : load_constraint(cfg);
        GibbsOptions gopts;
        if (cfg.n) {
            if (*cfg.n < 1) config_error("--n must be at least 1");
            gopts.iterations = static_cast<int>(*cfg.n);
        }
        Rng rng(require(cfg.seed, "--seed", cfg));
        const auto res = gibbs_fit(ConjugatePrior{}, *init, obs, spec, constraint, gopts, rng);
        if (res.samples.size() == 0) config_error("no samples kept; raise --n");

        std::ostringstream scores;
        scores << "sample,score\n";
        for (std::size_t t = 0; t < res.samples.size(); ++t) {
            char name[32];
            std::snprintf(name, sizeof name, "model_%05zu.json", t);
            io::write_model(dir / "samples" / name, res.samples.model(t));
            scores << t << ',' << io::format_double(res.samples.score(t)) << '\n';
        }
        io::write_text(dir / "scores.csv", scores.str());

        const auto best = retrospective_map(res.samples, obs, spec, constraint);
        io::write_model(dir / "model.json", res.samples.model(best.sample_index));
        io::write_path(dir / "path.csv", best.decoded.path);
        json info;
        info["constraint"] = constraint.to_string();
        info["stored_samples"] = res.samples.size();
        info["rejections"] = res.rejections;
        info["best_sample"] = best.sample_index;
        info["retrospective_probability"] = io::json_number(retrospective_prob(res.samples, obs, spec, constraint));
        io::write_json(dir / "gibbs.json", info);
        return 0;
    }
    config_error("--method must be em, constrained or gibbs");
}

int cmd_decode(const RunConfig& cfg) {
    const auto model = load_model(cfg);
    const auto obs = load_obs(cfg, model.family());
    const auto spec = load_spec(cfg, model.num_states());
    const auto dir = out_dir(cfg);

    if (!cfg.constraint.empty()) {
        if (cfg.kmax) config_error("decode takes either --kmax or --constraint, not both");
        const auto constraint = load_constraint(cfg);
        const auto best = kseg_map(model, obs, spec, constraint);
        json doc;
        doc["constraint"] = constraint.to_string();
        doc["feasible"] = best.has_value();
        doc["log_joint"] = best ? io::json_number(best->log_joint) : json(nullptr);
        doc["path_file"] = best ? json("path.csv") : json(nullptr);
        io::write_json(dir / "decode.json", doc);
        if (!best) {
            std::cerr << "error: no path satisfies " << constraint.to_string() << '\n';
            return 1;
        }
        io::write_path(dir / "path.csv", best->path);
        return 0;
    }

    const int k_max = require(cfg.kmax, "--kmax or --constraint", cfg);
    const auto dec = kseg_viterbi(model, obs, spec, k_max);
    json doc;
    doc["k_max"] = k_max;
    json entries = json::array();
    for (const auto& e : dec.entries) {
        json row;
        row["k"] = e.count;
        row["feasible"] = e.feasible;
        row["log_joint"] = e.feasible ? io::json_number(e.log_joint) : json(nullptr);
        if (e.feasible) {
            const std::string file = "paths/decode_k" + std::to_string(e.count) + ".csv";
            io::write_path(dir / file, e.path);
            row["path_file"] = file;
        } else {
            row["path_file"] = nullptr;
        }
        entries.push_back(row);
    }
    doc["entries"] = entries;
    io::write_json(dir / "decode.json", doc);
    if (!dec.diagnostic.empty()) {
        std::cerr << "error: " << dec.diagnostic << '\n';
        return 1;
    }
    return 0;
}

int cmd_prob(const RunConfig& cfg) {
    const auto model = load_model(cfg);
    const auto obs = load_obs(cfg, model.family());
    const auto spec = load_spec(cfg, model.num_states());
    const auto constraint = load_constraint(cfg);
    json doc;
    doc["constraint"] = constraint.to_string();
    doc["probability"] = io::json_number(kseg_prob(model, obs, spec, constraint));
    doc["log_joint"] = io::json_number(kseg_log_joint(model, obs, spec, constraint));
    const std::string text = io::dump_json(doc);
    std::cout << text;
    if (!cfg.out.empty()) io::write_text(fs::path(cfg.out) / "prob.json", text);
    return 0;
}

int cmd_sample(const RunConfig& cfg) {
    const auto model = load_model(cfg);
    const auto obs = load_obs(cfg, model.family());
    const auto spec = load_spec(cfg, model.num_states());
    const auto constraint = load_constraint(cfg);
    const long long n = require(cfg.n, "--n", cfg);
    if (n < 1) config_error("--n must be at least 1");
    Rng rng(require(cfg.seed, "--seed", cfg));
    const auto dir = out_dir(cfg);
    const auto draws = kseg_sample(model, obs, spec, constraint, static_cast<std::size_t>(n), rng);
    io::write_text(dir / "samples.csv", rows_csv(draws));
    return 0;
}

int cmd_summary(const RunConfig& cfg) {
    const auto model = load_model(cfg);
    const auto obs = load_obs(cfg, model.family());
    const auto spec = load_spec(cfg, model.num_states());
    const int k_max = require(cfg.kmax, "--kmax", cfg);
    const auto dir = out_dir(cfg);
    const auto summary = kmax_summary(model, obs, spec, k_max);

    json doc;
    doc["k_max"] = k_max;
    doc["log_evidence"] = io::json_number(summary.log_evidence);
    doc["total_probability"] = io::json_number(summary.total_probability());
    json entries = json::array();
    for (const auto& e : summary.entries) {
        json row;
        row["k"] = e.count;
        row["overflow"] = e.overflow;
        row["probability"] = io::json_number(e.probability);
        row["log_joint"] = io::json_number(e.log_joint);
        if (e.path) {
            const std::string file = e.overflow ? "paths/summary_gt" + std::to_string(k_max) + ".csv"
                                                : "paths/summary_k" + std::to_string(e.count) + ".csv";
            io::write_path(dir / file, *e.path);
            row["path_file"] = file;
            row["path_log_joint"] = io::json_number(e.path_log_joint);
        } else {
            row["path_file"] = nullptr;
            row["path_log_joint"] = nullptr;
        }
        entries.push_back(row);
    }
    doc["entries"] = entries;
    io::write_json(dir / "summary.json", doc);
    return 0;
}

int cmd_marginals(const RunConfig& cfg) {
    const auto model = load_model(cfg);
    const auto obs = load_obs(cfg, model.family());
    const auto dir = out_dir(cfg);
    const auto pm = cfg.constraint.empty()
                        ? posterior_marginals(model, obs)
                        : constrained_marginals(model, obs, load_spec(cfg, model.num_states()), load_constraint(cfg));
    std::ostringstream out;
    out << "position";
    for (int m = 0; m < pm.num_states; ++m) out << ",state_" << m;
    out << '\n';
    for (std::size_t n = 0; n < pm.length; ++n) {
        out << n;
        for (int m = 0; m < pm.num_states; ++m) out << ',' << io::format_double(pm.site_at(n, m));
        out << '\n';
    }
    io::write_text(dir / "marginals.csv", out.str());
    return 0;
}

int dispatch(const RunConfig& cfg) {
    if (cfg.command == "simulate") return cmd_simulate(cfg);
    if (cfg.command == "fit") return cmd_fit(cfg);
    if (cfg.command == "decode") return cmd_decode(cfg);
    if (cfg.command == "prob") return cmd_prob(cfg);
    if (cfg.command == "sample") return cmd_sample(cfg);
    if (cfg.command == "summary") return cmd_summary(cfg);
    return cmd_marginals(cfg);
}

} // namespace

int main(int argc, char** argv) {
    RunConfig cfg;
    CLI::App app{"k-segment inference for hidden Markov models"};
    app.require_subcommand(1);

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--model", cfg.model, "model JSON");
        sub->add_option("--obs", cfg.obs, "observation CSV");
        sub->add_option("--out", cfg.out, "output directory");
    };
    const auto add_spec = [&](CLI::App* sub) {
        sub->add_option("--spec", cfg.spec, "counting spec JSON (standard counting when omitted)");
        sub->add_option("--constraint", cfg.constraint, "exact:K, atmost:K, range:K1:K2 or greater:K");
    };

    auto* simulate_cmd = app.add_subcommand("simulate", "simulate a path and observations from a model");
    add_common(simulate_cmd);
    simulate_cmd->add_option("--n", cfg.n, "sequence length");
    simulate_cmd->add_option("--seed", cfg.seed, "random seed");

    auto* fit_cmd = app.add_subcommand("fit", "estimate model parameters");
    add_common(fit_cmd);
    add_spec(fit_cmd);
    fit_cmd->add_option("--method", cfg.method, "em, constrained or gibbs");
    fit_cmd->add_option("--states", cfg.states, "number of states when no --model is given");
    fit_cmd->add_option("--family", cfg.family, "gaussian or categorical, when no --model is given");
    fit_cmd->add_option("--fix-emission", cfg.fixed_emissions, "state whose emission stays fixed (repeatable)");
    fit_cmd->add_option("--restarts", cfg.restarts, "EM runs from different starting points; the best is kept");
    fit_cmd->add_option("--n", cfg.n, "Gibbs iterations");
    fit_cmd->add_option("--seed", cfg.seed, "random seed for Gibbs or restarts");

    auto* decode_cmd = app.add_subcommand("decode", "best path per segment count, or under one constraint");
    add_common(decode_cmd);
    add_spec(decode_cmd);
    decode_cmd->add_option("--kmax", cfg.kmax, "largest segment count to decode");

    auto* prob_cmd = app.add_subcommand("prob", "posterior probability of a constraint");
    add_common(prob_cmd);
    add_spec(prob_cmd);

    auto* sample_cmd = app.add_subcommand("sample", "draw paths conditioned on a constraint");
    add_common(sample_cmd);
    add_spec(sample_cmd);
    sample_cmd->add_option("--n", cfg.n, "number of draws");
    sample_cmd->add_option("--seed", cfg.seed, "random seed");

    auto* summary_cmd = app.add_subcommand("summary", "probabilities and best paths for k = 1..kmax and > kmax");
    add_common(summary_cmd);
    add_spec(summary_cmd);
    summary_cmd->add_option("--kmax", cfg.kmax, "largest segment count");

    auto* marginals_cmd = app.add_subcommand("marginals", "posterior state marginals, optionally constrained");
    add_common(marginals_cmd);
    add_spec(marginals_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    cfg.command = app.get_subcommands().front()->get_name();

    try {
        return dispatch(cfg);
    } catch (const ZeroProbabilityEvent& e) {
        std::cerr << "error: " << e.what() << " (event probability " << io::format_double(e.probability())
                  << ")\n";
        return 1;
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const Unsupported& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
