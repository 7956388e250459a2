#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "model_fixtures.hpp"
#include "nextpp/checkpoint.hpp"
#include "nextpp/errors.hpp"

using namespace nextpp;
using nextpp::testing::tiny_config;

namespace fs = std::filesystem;

namespace {

Model awkward_model() {
    Model m = Model::create(tiny_config(3), std::vector<double>{0.1, 0.2, 0.3}, 5);
    // Values whose shortest decimal form is long or denormal.
    auto d = m.params().mutable_get("intensity.b").data();
    d[0] = 0.1 + 0.2;
    d[1] = 4.9406564584124654e-324;
    d[2] = -1.7976931348623157e308;
    return m;
}

}  // namespace

TEST(Checkpoint, StringRoundTripIsBitExact) {
    Model m = awkward_model();
    Model back = checkpoint_from_string(checkpoint_to_string(m));
    EXPECT_TRUE(back.params() == m.params());
    EXPECT_EQ(back.config(), m.config());
}

TEST(Checkpoint, FileRoundTrip) {
    const fs::path p = fs::temp_directory_path() / "nextpp_ckpt_roundtrip.json";
    Model m = awkward_model();
    save_checkpoint(m, p);
    Model back = load_checkpoint(p, m.config());
    EXPECT_TRUE(back.params() == m.params());
    fs::remove(p);
}

TEST(Checkpoint, EmbedsVersionAndHash) {
    const std::string s = checkpoint_to_string(awkward_model());
    EXPECT_NE(s.find("\"format_version\""), std::string::npos);
    EXPECT_NE(s.find("\"config_hash\""), std::string::npos);
}

TEST(Checkpoint, TruncatedFileIsParseError) {
    const std::string s = checkpoint_to_string(awkward_model());
    for (std::size_t cut : {s.size() / 2, s.size() - 3, std::size_t{10}}) {
        EXPECT_THROW(checkpoint_from_string(s.substr(0, cut)), ParseError) << cut;
    }
    const fs::path p = fs::temp_directory_path() / "nextpp_ckpt_trunc.json";
    {
        std::ofstream f(p);
        f << s.substr(0, s.size() / 3);
    }
    EXPECT_THROW(load_checkpoint(p), ParseError);
    fs::remove(p);
}

TEST(Checkpoint, VersionMismatchIsIncompatible) {
    std::string s = checkpoint_to_string(awkward_model());
    const std::string key = "\"format_version\":1";
    auto pos = s.find(key);
    ASSERT_NE(pos, std::string::npos) << s.substr(0, 200);
    s.replace(pos, key.size(), "\"format_version\":99");
    EXPECT_THROW(checkpoint_from_string(s), IncompatibleError);
}

TEST(Checkpoint, DimensionMismatchIsIncompatible) {
    const fs::path p = fs::temp_directory_path() / "nextpp_ckpt_dims.json";
    save_checkpoint(awkward_model(), p);
    ModelConfig other = tiny_config(3);
    other.model_dim = 16;
    EXPECT_THROW(load_checkpoint(p, other), IncompatibleError);
    fs::remove(p);
}

TEST(Checkpoint, MissingFileIsIoError) {
    EXPECT_THROW(load_checkpoint("/nonexistent/ckpt.json"), IoError);
}
