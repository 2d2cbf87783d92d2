#ifndef KSEG_IO_HPP
#define KSEG_IO_HPP

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "kseg/counting.hpp"
#include "kseg/hmm.hpp"

namespace kseg::io {

/// 17 significant digits; "inf", "-inf" and "nan" for non-finite values.
std::string format_double(double value);

/// JSON number, or null when the value is not finite.
nlohmann::json json_number(double value);

nlohmann::json model_to_json(const HmmModel& model);
HmmModel model_from_json(const nlohmann::json& doc);

/// Model files:
///   {"num_states": M, "initial": [...], "transition": [[...], ...],
///    "emissions": [{"type": "gaussian", "mean": m, "variance": v} |
///                  {"type": "categorical", "probs": [...]}, ...]}
HmmModel read_model(const std::filesystem::path& file);
void write_model(const std::filesystem::path& file, const HmmModel& model);

/// One observation per line, optional "value" header. Categorical sequences
/// hold 0-based symbol indices.
ObsSeq read_observations(const std::filesystem::path& file, EmissionFamily family);
void write_observations(const std::filesystem::path& file, const ObsSeq& obs);

StatePath read_path(const std::filesystem::path& file);
void write_path(const std::filesystem::path& file, const StatePath& path);

/// {"mode": "standard" | "generalized" | "excursion" | "restricted_excursion",
///  "mu": [...], "C": [[...]], "null_set": [...], "absorb_at": k}
CountingSpec spec_from_json(const nlohmann::json& doc, int num_states);
nlohmann::json spec_to_json(const CountingSpec& spec);
CountingSpec read_spec(const std::filesystem::path& file, int num_states);

nlohmann::json read_json(const std::filesystem::path& file);
/// Indented text with floats at 17 significant digits, newline-terminated.
std::string dump_json(const nlohmann::json& doc);
void write_json(const std::filesystem::path& file, const nlohmann::json& doc);
void write_text(const std::filesystem::path& file, const std::string& text);

} // namespace kseg::io

#endif
