#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "kseg/errors.hpp"
#include "kseg/io.hpp"

namespace kseg::io {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::ifstream open_in(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw InvalidInput("cannot open '" + file.string() + "'");
    return in;
}

std::ofstream open_out(const std::filesystem::path& file) {
    if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write '" + file.string() + "'");
    return out;
}

std::vector<std::string> data_lines(const std::filesystem::path& file) {
    auto in = open_in(file);
    std::vector<std::string> out;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        line = trim(line);
        if (first && (line == "value" || line == "state")) {
            first = false;
            continue;
        }
        first = false;
        if (!line.empty()) out.push_back(line);
    }
    if (out.empty()) throw InvalidInput("'" + file.string() + "' holds no values");
    return out;
}

double parse_real(const std::string& text, const std::filesystem::path& file) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != text.size() || !std::isfinite(v)) {
        throw InvalidInput("bad number '" + text + "' in '" + file.string() + "'");
    }
    return v;
}

int parse_index(const std::string& text, const std::filesystem::path& file) {
    std::size_t used = 0;
    int v = -1;
    try {
        v = std::stoi(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != text.size() || v < 0) {
        throw InvalidInput("bad index '" + text + "' in '" + file.string() + "'");
    }
    return v;
}

template <class T>
T get_field(const json& doc, const char* key) {
    if (!doc.contains(key)) throw InvalidInput(std::string("missing field '") + key + "'");
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception&) {
        throw InvalidInput(std::string("field '") + key + "' has the wrong type");
    }
}

void dump(std::ostream& out, const json& v, int indent, int depth) {
    const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
    const std::string close_pad(static_cast<std::size_t>(indent * depth), ' ');
    switch (v.type()) {
    case json::value_t::number_float:
        out << format_double(v.get<double>());
        break;
    case json::value_t::array: {
        if (v.empty()) {
            out << "[]";
            break;
        }
        // arrays of scalars stay on one line
        const bool flat = std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_primitive(); });
        out << '[';
        bool first = true;
        for (const auto& e : v) {
            if (!first) out << (flat ? ", " : ",");
            if (!flat) out << '\n' << pad;
            dump(out, e, indent, depth + 1);
            first = false;
        }
        if (!flat) out << '\n' << close_pad;
        out << ']';
        break;
    }
    case json::value_t::object: {
        if (v.empty()) {
            out << "{}";
            break;
        }
        out << '{';
        bool first = true;
        for (auto it = v.begin(); it != v.end(); ++it) {
            if (!first) out << ',';
            out << '\n' << pad << json(it.key()).dump() << ": ";
            dump(out, it.value(), indent, depth + 1);
            first = false;
        }
        out << '\n' << close_pad << '}';
        break;
    }
    default:
        out << v.dump();
    }
}

} // namespace

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

json json_number(double value) {
    if (!std::isfinite(value)) return nullptr;
    return value;
}

json model_to_json(const HmmModel& model) {
    json doc;
    doc["num_states"] = model.num_states();
    doc["initial"] = std::vector<double>(model.initial().begin(), model.initial().end());
    doc["transition"] = model.transition_rows();
    json em = json::array();
    for (const auto& e : model.emissions()) {
        if (const auto* g = std::get_if<Gaussian>(&e)) {
            em.push_back({{"type", "gaussian"}, {"mean", g->mean}, {"variance", g->variance}});
        } else {
            em.push_back({{"type", "categorical"}, {"probs", std::get<Categorical>(e).probs}});
        }
    }
    doc["emissions"] = em;
    return doc;
}

HmmModel model_from_json(const json& doc) {
    if (!doc.is_object()) throw InvalidInput("model document must be a JSON object");
    auto initial = get_field<std::vector<double>>(doc, "initial");
    auto transition = get_field<std::vector<std::vector<double>>>(doc, "transition");
    const json& em = doc.contains("emissions") ? doc.at("emissions") : json();
    if (!em.is_array()) throw InvalidInput("field 'emissions' must be an array");
    std::vector<EmissionDist> emissions;
    for (const auto& e : em) {
        const auto type = get_field<std::string>(e, "type");
        if (type == "gaussian") {
            emissions.push_back(Gaussian{get_field<double>(e, "mean"), get_field<double>(e, "variance")});
        } else if (type == "categorical") {
            emissions.push_back(Categorical{get_field<std::vector<double>>(e, "probs")});
        } else {
            throw InvalidInput("unknown emission type '" + type + "'");
        }
    }
    if (doc.contains("num_states") && get_field<int>(doc, "num_states") != static_cast<int>(initial.size())) {
        throw InvalidInput("num_states disagrees with the initial distribution");
    }
    return HmmModel(std::move(initial), std::move(transition), std::move(emissions));
}

json read_json(const std::filesystem::path& file) {
    auto in = open_in(file);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw InvalidInput("'" + file.string() + "' is not valid JSON: " + e.what());
    }
}

std::string dump_json(const json& doc) {
    std::ostringstream out;
    dump(out, doc, 2, 0);
    out << '\n';
    return out.str();
}

void write_json(const std::filesystem::path& file, const json& doc) {
    auto out = open_out(file);
    out << dump_json(doc);
}

void write_text(const std::filesystem::path& file, const std::string& text) {
    auto out = open_out(file);
    out << text;
}

HmmModel read_model(const std::filesystem::path& file) {
    try {
        return model_from_json(read_json(file));
    } catch (const InvalidInput& e) {
        const std::string what = e.what();
        if (what.find(file.string()) != std::string::npos) throw;
        throw InvalidInput("model '" + file.string() + "': " + what);
    }
}

void write_model(const std::filesystem::path& file, const HmmModel& model) {
    write_json(file, model_to_json(model));
}

ObsSeq read_observations(const std::filesystem::path& file, EmissionFamily family) {
    const auto lines = data_lines(file);
    if (family == EmissionFamily::gaussian) {
        std::vector<double> values;
        for (const auto& l : lines) values.push_back(parse_real(l, file));
        return ObsSeq::reals(std::move(values));
    }
    std::vector<int> values;
    for (const auto& l : lines) values.push_back(parse_index(l, file));
    return ObsSeq::symbols(std::move(values));
}

void write_observations(const std::filesystem::path& file, const ObsSeq& obs) {
    std::ostringstream out;
    if (obs.family() == EmissionFamily::gaussian) {
        for (double v : obs.real_values()) out << format_double(v) << '\n';
    } else {
        for (int v : obs.symbol_values()) out << v << '\n';
    }
    write_text(file, out.str());
}

StatePath read_path(const std::filesystem::path& file) {
    StatePath out;
    for (const auto& l : data_lines(file)) out.push_back(parse_index(l, file));
    return out;
}

void write_path(const std::filesystem::path& file, const StatePath& path) {
    std::ostringstream out;
    for (int x : path) out << x << '\n';
    write_text(file, out.str());
}

CountingSpec spec_from_json(const json& doc, int num_states) {
    if (!doc.is_object()) throw InvalidInput("counting spec must be a JSON object");
    const auto mode = doc.contains("mode") ? get_field<std::string>(doc, "mode") : std::string("standard");
    CountingSpec spec = CountingSpec::standard();
    if (mode == "standard") {
    } else if (mode == "generalized") {
        spec = CountingSpec::generalized(get_field<std::vector<int>>(doc, "mu"),
                                         get_field<std::vector<std::vector<int>>>(doc, "C"));
    } else if (mode == "excursion") {
        spec = CountingSpec::excursion(get_field<std::vector<int>>(doc, "null_set"), num_states);
    } else if (mode == "restricted_excursion") {
        spec = CountingSpec::restricted_excursion(get_field<std::vector<int>>(doc, "null_set"), num_states);
    } else {
        throw InvalidInput("unknown counting mode '" + mode + "'");
    }
    if (doc.contains("absorb_at") && !doc.at("absorb_at").is_null()) {
        spec = spec.with_absorption(get_field<int>(doc, "absorb_at"));
    }
    spec.check_states(num_states);
    return spec;
}

json spec_to_json(const CountingSpec& spec) {
    json doc;
    switch (spec.mode()) {
    case CountingMode::standard:
        doc["mode"] = "standard";
        break;
    case CountingMode::generalized:
        doc["mode"] = "generalized";
        doc["mu"] = spec.mu();
        doc["C"] = spec.counted();
        break;
    case CountingMode::excursion:
        doc["mode"] = "excursion";
        doc["null_set"] = spec.null_set();
        break;
    case CountingMode::restricted_excursion:
        doc["mode"] = "restricted_excursion";
        doc["null_set"] = spec.null_set();
        break;
    }
    if (spec.absorb_at()) doc["absorb_at"] = *spec.absorb_at();
    return doc;
}

CountingSpec read_spec(const std::filesystem::path& file, int num_states) {
    try {
        return spec_from_json(read_json(file), num_states);
    } catch (const InvalidInput& e) {
        const std::string what = e.what();
        if (what.find(file.string()) != std::string::npos) throw;
        throw InvalidInput("counting spec '" + file.string() + "': " + what);
    }
}

} // namespace kseg::io
