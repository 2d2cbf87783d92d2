#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "kseg/errors.hpp"
#include "kseg/io.hpp"
#include "kseg/kseg_dp.hpp"
#include "kseg/learning.hpp"
#include "kseg/oracle.hpp"

namespace py = pybind11;
using namespace kseg;

namespace {

// Sequences arrive as plain Python lists; the model decides how to read them.
ObsSeq to_obs(const HmmModel& model, const py::sequence& values) {
    if (model.family() == EmissionFamily::categorical) return ObsSeq::symbols(values.cast<std::vector<int>>());
    return ObsSeq::reals(values.cast<std::vector<double>>());
}

py::object obs_to_list(const ObsSeq& obs) {
    if (obs.family() == EmissionFamily::categorical) {
        return py::cast(std::vector<int>(obs.symbol_values().begin(), obs.symbol_values().end()));
    }
    return py::cast(std::vector<double>(obs.real_values().begin(), obs.real_values().end()));
}

std::vector<std::vector<double>> site_table(const PosteriorMarginals& pm) {
    std::vector<std::vector<double>> out(pm.length, std::vector<double>(pm.num_states));
    for (std::size_t n = 0; n < pm.length; ++n) {
        for (int m = 0; m < pm.num_states; ++m) out[n][m] = pm.site_at(n, m);
    }
    return out;
}

py::dict decoded_dict(const Decoded& d) {
    py::dict out;
    out["path"] = d.path;
    out["log_joint"] = d.log_joint;
    return out;
}

CountingSpec spec_or_standard(const std::optional<CountingSpec>& spec) {
    return spec ? *spec : CountingSpec::standard();
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "k-segment inference for hidden Markov models";

    py::register_exception<ZeroProbabilityEvent>(m, "ZeroProbabilityEvent", PyExc_RuntimeError);
    py::register_exception<EnumerationTooLarge>(m, "EnumerationTooLarge", PyExc_OverflowError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const InvalidInput& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const Unsupported& e) {
            PyErr_SetString(PyExc_NotImplementedError, e.what());
        }
    });

    py::class_<HmmModel>(m, "Model")
        .def_static(
            "gaussian",
            [](std::vector<double> initial, std::vector<std::vector<double>> transition, const std::vector<double>& means,
               const std::vector<double>& variances) {
                if (means.size() != variances.size()) throw InvalidInput("means and variances differ in length");
                std::vector<EmissionDist> em;
                for (std::size_t i = 0; i < means.size(); ++i) em.push_back(Gaussian{means[i], variances[i]});
                return HmmModel(std::move(initial), std::move(transition), std::move(em));
            },
            py::arg("initial"), py::arg("transition"), py::arg("means"), py::arg("variances"))
        .def_static(
            "categorical",
            [](std::vector<double> initial, std::vector<std::vector<double>> transition,
               const std::vector<std::vector<double>>& probs) {
                std::vector<EmissionDist> em;
                for (const auto& row : probs) em.push_back(Categorical{row});
                return HmmModel(std::move(initial), std::move(transition), std::move(em));
            },
            py::arg("initial"), py::arg("transition"), py::arg("probs"))
        .def_static(
            "from_json", [](const std::string& text) { return io::model_from_json(nlohmann::json::parse(text)); },
            py::arg("text"))
        .def_static("load", [](const std::string& path) { return io::read_model(path); }, py::arg("path"))
        .def("to_json", [](const HmmModel& model) { return io::dump_json(io::model_to_json(model)); })
        .def("save", [](const HmmModel& model, const std::string& path) { io::write_model(path, model); },
             py::arg("path"))
        .def_property_readonly("num_states", &HmmModel::num_states)
        .def_property_readonly("is_categorical",
                               [](const HmmModel& model) { return model.family() == EmissionFamily::categorical; })
        .def_property_readonly("initial", [](const HmmModel& model) {
            return std::vector<double>(model.initial().begin(), model.initial().end());
        })
        .def_property_readonly("transition", &HmmModel::transition_rows)
        .def_property_readonly("means",
                               [](const HmmModel& model) {
                                   std::vector<double> out;
                                   for (const auto& e : model.emissions()) out.push_back(std::get<Gaussian>(e).mean);
                                   return out;
                               })
        .def_property_readonly("variances",
                               [](const HmmModel& model) {
                                   std::vector<double> out;
                                   for (const auto& e : model.emissions()) {
                                       out.push_back(std::get<Gaussian>(e).variance);
                                   }
                                   return out;
                               })
        .def_property_readonly("emission_probs", [](const HmmModel& model) {
            std::vector<std::vector<double>> out;
            for (const auto& e : model.emissions()) out.push_back(std::get<Categorical>(e).probs);
            return out;
        });

    py::class_<CountingSpec>(m, "CountingSpec")
        .def_static("standard", &CountingSpec::standard)
        .def_static("generalized", &CountingSpec::generalized, py::arg("mu"), py::arg("C"))
        .def_static("excursion", &CountingSpec::excursion, py::arg("null_set"), py::arg("num_states"))
        .def_static("restricted_excursion", &CountingSpec::restricted_excursion, py::arg("null_set"),
                    py::arg("num_states"))
        .def_static(
            "from_json",
            [](const std::string& text, int num_states) {
                return io::spec_from_json(nlohmann::json::parse(text), num_states);
            },
            py::arg("text"), py::arg("num_states"))
        .def("to_json", [](const CountingSpec& spec) { return io::dump_json(io::spec_to_json(spec)); })
        .def("with_absorption", &CountingSpec::with_absorption, py::arg("k"))
        .def("count", [](const CountingSpec& spec, const StatePath& path) { return count_segments(path, spec); },
             py::arg("path"), "segment count of a path, or None when the path is forbidden")
        .def("min_count", &CountingSpec::min_count)
        .def("max_attainable_count", &CountingSpec::max_attainable_count, py::arg("length"));

    py::class_<SegmentConstraint>(m, "Constraint")
        .def_static("parse", &SegmentConstraint::parse, py::arg("text"))
        .def_static("exactly", &SegmentConstraint::exactly, py::arg("k"))
        .def_static("at_most", &SegmentConstraint::at_most, py::arg("k"))
        .def_static("range", &SegmentConstraint::range, py::arg("k1"), py::arg("k2"))
        .def_static("greater_than", &SegmentConstraint::greater_than, py::arg("k"))
        .def("admits", &SegmentConstraint::admits, py::arg("count"))
        .def("__str__", &SegmentConstraint::to_string)
        .def("__repr__", [](const SegmentConstraint& c) { return "Constraint('" + c.to_string() + "')"; });

    m.def(
        "simulate",
        [](const HmmModel& model, std::size_t length, std::uint64_t seed) {
            Rng rng(seed);
            const auto sim = simulate(model, length, rng);
            return py::make_tuple(sim.path, obs_to_list(sim.observations));
        },
        py::arg("model"), py::arg("length"), py::arg("seed"), "(path, observations) drawn from the model");

    m.def(
        "log_likelihood",
        [](const HmmModel& model, const py::sequence& obs) { return forward(model, to_obs(model, obs)).log_likelihood; },
        py::arg("model"), py::arg("obs"));

    m.def(
        "viterbi", [](const HmmModel& model, const py::sequence& obs) { return decoded_dict(viterbi(model, to_obs(model, obs))); },
        py::arg("model"), py::arg("obs"));

    m.def(
        "ffbs_sample",
        [](const HmmModel& model, const py::sequence& obs, std::size_t n, std::uint64_t seed) {
            const auto y = to_obs(model, obs);
            Rng rng(seed);
            std::vector<StatePath> out;
            for (std::size_t i = 0; i < n; ++i) out.push_back(ffbs_sample(model, y, rng));
            return out;
        },
        py::arg("model"), py::arg("obs"), py::arg("n"), py::arg("seed"));

    m.def(
        "posterior_marginals",
        [](const HmmModel& model, const py::sequence& obs) {
            return site_table(posterior_marginals(model, to_obs(model, obs)));
        },
        py::arg("model"), py::arg("obs"), "N x M table of p(x_n = m | y)");

    m.def(
        "em_fit",
        [](const HmmModel& init, const py::sequence& obs, int max_iterations, std::vector<int> fixed_emissions) {
            EmOptions opts;
            opts.max_iterations = max_iterations;
            opts.fixed_emissions = std::move(fixed_emissions);
            auto fit = em_fit(init, to_obs(init, obs), opts);
            return py::make_tuple(fit.model, fit.loglik_trace);
        },
        py::arg("init"), py::arg("obs"), py::arg("max_iterations") = 500,
        py::arg("fixed_emissions") = std::vector<int>{}, "(model, log-likelihood trace)");

    m.def(
        "default_init",
        [](const py::sequence& obs, int num_states, bool categorical) {
            const auto y = categorical ? ObsSeq::symbols(obs.cast<std::vector<int>>())
                                       : ObsSeq::reals(obs.cast<std::vector<double>>());
            return default_init(y, num_states);
        },
        py::arg("obs"), py::arg("num_states"), py::arg("categorical") = false);

    m.def(
        "segment_log_joint",
        [](const HmmModel& model, const py::sequence& obs, const SegmentConstraint& c,
           const std::optional<CountingSpec>& spec) {
            return kseg_log_joint(model, to_obs(model, obs), spec_or_standard(spec), c);
        },
        py::arg("model"), py::arg("obs"), py::arg("constraint"), py::arg("spec") = py::none(), "log p(event, y)");

    m.def(
        "segment_prob",
        [](const HmmModel& model, const py::sequence& obs, const SegmentConstraint& c,
           const std::optional<CountingSpec>& spec) {
            return kseg_prob(model, to_obs(model, obs), spec_or_standard(spec), c);
        },
        py::arg("model"), py::arg("obs"), py::arg("constraint"), py::arg("spec") = py::none(), "p(event | y)");

    m.def(
        "segment_map",
        [](const HmmModel& model, const py::sequence& obs, const SegmentConstraint& c,
           const std::optional<CountingSpec>& spec) -> py::object {
            const auto best = kseg_map(model, to_obs(model, obs), spec_or_standard(spec), c);
            if (!best) return py::none();
            return decoded_dict(*best);
        },
        py::arg("model"), py::arg("obs"), py::arg("constraint"), py::arg("spec") = py::none(),
        "best path satisfying the constraint, or None");

    m.def(
        "segment_viterbi",
        [](const HmmModel& model, const py::sequence& obs, int k_max, const std::optional<CountingSpec>& spec) {
            const auto dec = kseg_viterbi(model, to_obs(model, obs), spec_or_standard(spec), k_max);
            py::list out;
            for (const auto& e : dec.entries) {
                py::dict row;
                row["k"] = e.count;
                row["feasible"] = e.feasible;
                row["path"] = e.feasible ? py::cast(e.path) : py::none();
                row["log_joint"] = e.feasible ? py::cast(e.log_joint) : py::none();
                out.append(row);
            }
            return out;
        },
        py::arg("model"), py::arg("obs"), py::arg("k_max"), py::arg("spec") = py::none(),
        "best path for every segment count up to k_max");

    m.def(
        "segment_sample",
        [](const HmmModel& model, const py::sequence& obs, const SegmentConstraint& c, std::size_t n,
           std::uint64_t seed, const std::optional<CountingSpec>& spec) {
            Rng rng(seed);
            return kseg_sample(model, to_obs(model, obs), spec_or_standard(spec), c, n, rng);
        },
        py::arg("model"), py::arg("obs"), py::arg("constraint"), py::arg("n"), py::arg("seed"),
        py::arg("spec") = py::none());

    m.def(
        "summary",
        [](const HmmModel& model, const py::sequence& obs, int k_max, const std::optional<CountingSpec>& spec) {
            const auto s = kmax_summary(model, to_obs(model, obs), spec_or_standard(spec), k_max);
            py::dict out;
            out["k_max"] = s.k_max;
            out["log_evidence"] = s.log_evidence;
            out["total_probability"] = s.total_probability();
            py::list entries;
            for (const auto& e : s.entries) {
                py::dict row;
                row["k"] = e.count;
                row["overflow"] = e.overflow;
                row["probability"] = e.probability;
                row["log_joint"] = e.log_joint;
                row["path"] = e.path ? py::cast(*e.path) : py::none();
                row["path_log_joint"] = e.path ? py::cast(e.path_log_joint) : py::none();
                entries.append(row);
            }
            out["entries"] = entries;
            return out;
        },
        py::arg("model"), py::arg("obs"), py::arg("k_max"), py::arg("spec") = py::none());

    m.def(
        "constrained_marginals",
        [](const HmmModel& model, const py::sequence& obs, const SegmentConstraint& c,
           const std::optional<CountingSpec>& spec) {
            return site_table(constrained_marginals(model, to_obs(model, obs), spec_or_standard(spec), c));
        },
        py::arg("model"), py::arg("obs"), py::arg("constraint"), py::arg("spec") = py::none());

    m.def(
        "constrained_em",
        [](const HmmModel& init, const py::sequence& obs, const SegmentConstraint& c,
           const std::optional<CountingSpec>& spec, int max_iterations, std::vector<int> fixed_emissions) {
            EmOptions opts;
            opts.max_iterations = max_iterations;
            opts.fixed_emissions = std::move(fixed_emissions);
            auto fit = constrained_em(init, to_obs(init, obs), spec_or_standard(spec), c, opts);
            py::object path = fit.final_path ? py::cast(fit.final_path->path) : py::none();
            return py::make_tuple(fit.model, fit.constrained_loglik_trace, path);
        },
        py::arg("init"), py::arg("obs"), py::arg("constraint"), py::arg("spec") = py::none(),
        py::arg("max_iterations") = 500, py::arg("fixed_emissions") = std::vector<int>{},
        "(model, constrained log-likelihood trace, constrained MAP path)");

    m.def(
        "gibbs_fit",
        [](const HmmModel& init, const py::sequence& obs, const SegmentConstraint& c, int iterations,
           std::uint64_t seed, const std::optional<CountingSpec>& spec) {
            GibbsOptions opts;
            opts.iterations = iterations;
            Rng rng(seed);
            const auto y = to_obs(init, obs);
            const auto s = spec_or_standard(spec);
            const auto res = gibbs_fit(ConjugatePrior{}, init, y, s, c, opts, rng);
            py::dict out;
            out["models"] = res.samples.models();
            out["scores"] = res.samples.scores();
            out["paths"] = res.paths;
            out["rejections"] = res.rejections;
            if (res.samples.size() > 0) {
                out["retrospective_probability"] = retrospective_prob(res.samples, y, s, c);
            }
            return out;
        },
        py::arg("init"), py::arg("obs"), py::arg("constraint"), py::arg("iterations"), py::arg("seed"),
        py::arg("spec") = py::none());

    m.def(
        "oracle_event_prob",
        [](const HmmModel& model, const py::sequence& obs, const SegmentConstraint& c,
           const std::optional<CountingSpec>& spec) {
            return oracle::event_prob(oracle::enumerate_posterior(model, to_obs(model, obs)), spec_or_standard(spec), c);
        },
        py::arg("model"), py::arg("obs"), py::arg("constraint"), py::arg("spec") = py::none(),
        "p(event | y) by enumerating every path; small problems only");
}
