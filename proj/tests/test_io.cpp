#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "kseg/errors.hpp"
#include "kseg/io.hpp"
#include "support.hpp"

using namespace kseg;
using namespace kseg::testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "kseg_io_tests";
    fs::create_directories(dir);
    return dir / name;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

} // namespace

TEST(FormatDouble, SeventeenSignificantDigits) {
    EXPECT_EQ(io::format_double(0.1), "0.10000000000000001");
    EXPECT_EQ(io::format_double(-2.0), "-2");
    EXPECT_EQ(io::format_double(-INFINITY), "-inf");
    const double x = 1.0 / 3.0;
    EXPECT_EQ(std::stod(io::format_double(x)), x);
}

TEST(ModelFile, RoundTripsGaussian) {
    const auto model = three_level_model();
    const auto p = scratch("model.json");
    io::write_model(p, model);
    const auto back = io::read_model(p);
    EXPECT_EQ(flatten(back), flatten(model));
}

TEST(ModelFile, RoundTripsCategorical) {
    Rng rng(1);
    const auto model = random_model(3, true, rng, 5);
    const auto p = scratch("cat.json");
    io::write_model(p, model);
    EXPECT_EQ(flatten(io::read_model(p)), flatten(model));
}

TEST(ModelFile, MissingFileNamesThePath) {
    try {
        io::read_model("/nonexistent/dir/model.json");
        FAIL();
    } catch (const InvalidInput& e) {
        EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/model.json"), std::string::npos);
    }
}

TEST(ModelFile, RejectsMalformedDocuments) {
    const auto p = scratch("bad.json");
    write(p, "{\"initial\": [1.0], \"transition\": [[1.0]]}");
    EXPECT_THROW(io::read_model(p), InvalidInput);
    write(p, "{\"initial\": [1.0], \"transition\": [[1.0]], \"emissions\": [{\"type\": \"poisson\"}]}");
    EXPECT_THROW(io::read_model(p), InvalidInput);
    write(p, "not json");
    EXPECT_THROW(io::read_model(p), InvalidInput);
    write(p, "{\"num_states\": 2, \"initial\": [1.0], \"transition\": [[1.0]], "
             "\"emissions\": [{\"type\": \"gaussian\", \"mean\": 0, \"variance\": 1}]}");
    EXPECT_THROW(io::read_model(p), InvalidInput);
}

TEST(ObservationFile, OptionalHeaderAndRoundTrip) {
    const auto p = scratch("obs.csv");
    write(p, "value\n1.5\n-0.25\n\n3\n");
    const auto obs = io::read_observations(p, EmissionFamily::gaussian);
    ASSERT_EQ(obs.size(), 3u);
    EXPECT_EQ(obs.real_values()[1], -0.25);
    Rng rng(2);
    const auto sim = simulate(three_level_model(), 50, rng).observations;
    io::write_observations(p, sim);
    const auto back = io::read_observations(p, EmissionFamily::gaussian);
    for (std::size_t n = 0; n < 50; ++n) EXPECT_EQ(back.real_values()[n], sim.real_values()[n]);
}

TEST(ObservationFile, SymbolsAndErrors) {
    const auto p = scratch("sym.csv");
    write(p, "0\n2\n1\n");
    EXPECT_EQ(io::read_observations(p, EmissionFamily::categorical).symbol_values()[1], 2);
    write(p, "0\n-1\n");
    EXPECT_THROW(io::read_observations(p, EmissionFamily::categorical), InvalidInput);
    write(p, "0.5\nabc\n");
    EXPECT_THROW(io::read_observations(p, EmissionFamily::gaussian), InvalidInput);
    write(p, "value\n");
    EXPECT_THROW(io::read_observations(p, EmissionFamily::gaussian), InvalidInput);
}

TEST(PathFile, RoundTrip) {
    const auto p = scratch("path.csv");
    io::write_path(p, {0, 2, 2, 1});
    EXPECT_EQ(io::read_path(p), (StatePath{0, 2, 2, 1}));
}

TEST(SpecFile, AllModes) {
    using nlohmann::json;
    EXPECT_EQ(io::spec_from_json(json::parse(R"({"mode":"standard"})"), 3).mode(), CountingMode::standard);
    const auto g = io::spec_from_json(
        json::parse(R"({"mode":"generalized","mu":[0,1,0],"C":[[0,1,0],[0,0,0],[0,1,0]],"absorb_at":null})"), 3);
    EXPECT_EQ(g.mode(), CountingMode::generalized);
    EXPECT_FALSE(g.absorb_at());
    const auto e = io::spec_from_json(json::parse(R"({"mode":"excursion","null_set":[0],"absorb_at":2})"), 3);
    EXPECT_EQ(e.absorb_at(), 2);
    const auto r = io::spec_from_json(json::parse(R"({"mode":"restricted_excursion","null_set":[0,2]})"), 3);
    EXPECT_EQ(r.null_set(), (std::vector<int>{0, 2}));
    EXPECT_EQ(io::spec_to_json(r)["mode"], "restricted_excursion");
    EXPECT_THROW(io::spec_from_json(json::parse(R"({"mode":"weird"})"), 3), InvalidInput);
    EXPECT_THROW(io::spec_from_json(json::parse(R"({"mode":"generalized","mu":[0,1]})"), 3), InvalidInput);
    EXPECT_THROW(io::spec_from_json(json::parse(R"({"mode":"excursion","null_set":[0]})"), 1), InvalidInput);
}

TEST(JsonWriter, NumbersUseFullPrecision) {
    const auto p = scratch("doc.json");
    io::write_json(p, nlohmann::json{{"x", 0.1}, {"v", {1.5, 2.0}}, {"n", nullptr}});
    std::ifstream in(p);
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    EXPECT_NE(text.find("0.10000000000000001"), std::string::npos);
    EXPECT_EQ(io::read_json(p)["x"].get<double>(), 0.1);
}
