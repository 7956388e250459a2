#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "model_fixtures.hpp"
#include "nextpp/checkpoint.hpp"
#include "nextpp/cli.hpp"
#include "nextpp/config.hpp"
#include "nextpp/errors.hpp"
#include "nextpp/events.hpp"

using namespace nextpp;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "nextpp");
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("nextpp_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    // Small Hawkes benchmark variant that trains in seconds.
    fs::path small_data(const std::string& name = "data", int T = 25, int n_train = 12) {
        const fs::path out = dir / name;
        auto r = run({"generate", "hawkes", "--out", out.string(), "--seed", "3", "--set", "T=" + std::to_string(T),
                      "--set", "n_train=" + std::to_string(n_train), "--set", "n_dev=0", "--set", "n_test=3"});
        EXPECT_EQ(r.code, 0) << r.err;
        return out;
    }
    std::vector<std::string> tiny_model() {
        return {"--set", "model_dim=8", "--set", "latent_dim=4", "--set", "batch_size=4"};
    }
    fs::path dir;
};

}  // namespace

TEST_F(Cli, GenerateWritesDatasetsAndStats) {
    auto r = run({"generate", "hawkes", "--out", (dir / "g").string(), "--set", "n_train=30", "--set", "n_dev=5",
                  "--set", "n_test=5"});
    ASSERT_EQ(r.code, 0) << r.err;
    for (const char* f : {"train.jsonl", "dev.jsonl", "test.jsonl", "stats.txt", "config.txt"}) {
        EXPECT_TRUE(fs::exists(dir / "g" / f)) << f;
    }
    Dataset d = load_jsonl(dir / "g" / "train.jsonl");
    EXPECT_EQ(d.mark_count, 2u);
    EXPECT_EQ(d.split, Split::train);
    EXPECT_EQ(stats(d).mark_count, 2u);
}

TEST_F(Cli, GenerateIsReproducible) {
    auto a = small_data("a");
    auto b = small_data("b");
    EXPECT_EQ(slurp(a / "train.jsonl"), slurp(b / "train.jsonl"));
    EXPECT_EQ(slurp(a / "test.jsonl"), slurp(b / "test.jsonl"));
}

TEST_F(Cli, SupercriticalParamsAreValidationErrors) {
    auto r = run({"generate", "hawkes", "--out", dir.string(), "--set", "excitation=0.9,0.5;0.5,0.9"});
    EXPECT_EQ(r.code, kExitValidation);
    EXPECT_NE(r.err.find("spectral radius"), std::string::npos) << r.err;
}

TEST_F(Cli, UsageErrors) {
    EXPECT_EQ(run({}).code, kExitUsage);
    EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
    EXPECT_EQ(run({"train", "--bogus"}).code, kExitUsage);
    EXPECT_EQ(run({"train", "--out", dir.string()}).code, kExitUsage);
    EXPECT_EQ(run({"evaluate", "--data", "x.jsonl"}).code, kExitUsage);
    EXPECT_EQ(run({"--help"}).code, kExitOk);
}

TEST_F(Cli, ConfigFileRulesAndUnknownKeys) {
    {
        std::ofstream f(dir / "bad.cfg");
        f << "# comment\nseed = 4\nno_such_key = 1\n";
    }
    EXPECT_EQ(run({"inspect", "--config", (dir / "bad.cfg").string()}).code, kExitValidation);
    EXPECT_EQ(run({"inspect", "--set", "nope=1"}).code, kExitValidation);

    RunConfig c = RunConfig::from_text("  # header\nseed = 12   # trailing\n\nalpha=0.5\n");
    EXPECT_EQ(c.u64("seed"), 12u);
    EXPECT_EQ(c.real("alpha"), 0.5);
    EXPECT_THROW(RunConfig::from_text("just words\n"), ParseError);
    EXPECT_THROW(RunConfig::from_text("zzz = 1\n"), ValidationError);
    EXPECT_THROW(RunConfig::from_text("epochs = -3\n").count("epochs"), ValidationError);
    EXPECT_EQ(RunConfig::from_text(c.text()).text(), c.text());
}

TEST_F(Cli, InvalidDataIsValidationError) {
    {
        std::ofstream f(dir / "bad.jsonl");
        f << "{\"mark_count\": 1}\n{\"times\": [2.0, 1.0], \"marks\": [0, 0]}\n";
    }
    EXPECT_EQ(run({"inspect", "--data", (dir / "bad.jsonl").string()}).code, kExitValidation);
    EXPECT_EQ(run({"inspect", "--data", (dir / "missing.jsonl").string()}).code, kExitValidation);
}

TEST_F(Cli, InspectMatchesStats) {
    auto data = small_data();
    auto r = run({"inspect", "--data", (data / "train.jsonl").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const DatasetStats s = stats(load_jsonl(data / "train.jsonl"));
    EXPECT_EQ(r.out, format_stats(s, "train"));
}

TEST_F(Cli, TrainEvaluateSampleGof) {
    auto data = small_data("data", 50, 40);
    const fs::path run_dir = dir / "run";
    auto r = run({"train", "--data", (data / "train.jsonl").string(), "--out", run_dir.string(), "--epochs", "10",
                  "--seed", "5"});
    ASSERT_EQ(r.code, 0) << r.err;
    ASSERT_TRUE(fs::exists(run_dir / "checkpoint.json"));
    ASSERT_TRUE(fs::exists(run_dir / "config.txt"));

    // Loss CSV: finite, decreasing over the first ten epochs.
    std::istringstream csv(slurp(run_dir / "loss.csv"));
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "epoch,mle,kl,cont,total");
    std::vector<double> totals;
    while (std::getline(csv, line)) totals.push_back(std::stod(line.substr(line.rfind(',') + 1)));
    ASSERT_EQ(totals.size(), 10u);
    for (std::size_t i = 0; i < totals.size(); ++i) {
        EXPECT_TRUE(std::isfinite(totals[i]));
        if (i > 0) EXPECT_LT(totals[i], totals[i - 1]) << "epoch " << i + 1;
    }

    const std::string ckpt = (run_dir / "checkpoint.json").string();
    const std::string test = (data / "test.jsonl").string();
    auto ev = run({"evaluate", "--checkpoint", ckpt, "--data", test, "--out", (dir / "eval").string()});
    ASSERT_EQ(ev.code, 0) << ev.err;
    for (const char* f : {"metrics.json", "metrics.txt", "predictions.csv", "attention.csv", "attention_self.csv"}) {
        EXPECT_TRUE(fs::exists(dir / "eval" / f)) << f;
    }
    EXPECT_EQ(slurp(dir / "eval" / "predictions.csv").rfind("seq_id,event_index,true_t,pred_t,true_m,pred_m\n", 0), 0u);
    EXPECT_EQ(slurp(dir / "eval" / "attention.csv").rfind("layer,head,query,key,weight\n", 0), 0u);

    auto sa = run({"sample", "--checkpoint", ckpt, "--prefix", test, "--count", "4", "--out",
                   (dir / "sample").string()});
    ASSERT_EQ(sa.code, 0) << sa.err;
    Dataset samples = load_jsonl(dir / "sample" / "samples.jsonl");
    Dataset prefixes = load_jsonl(test);
    ASSERT_EQ(samples.sequences.size(), prefixes.sequences.size());
    EXPECT_GT(samples.sequences[0].size(), prefixes.sequences[0].size());

    auto gf = run({"gof", "--checkpoint", ckpt, "--data", test, "--out", (dir / "gof").string()});
    ASSERT_EQ(gf.code, 0) << gf.err;
    EXPECT_NE(slurp(dir / "gof" / "gof.json").find("\"p_value\""), std::string::npos);
}

TEST_F(Cli, TrainIsReproducibleFromResolvedConfig) {
    auto data = small_data();
    std::vector<std::string> args{"train", "--data", (data / "train.jsonl").string(), "--out",
                                  (dir / "r1").string(), "--epochs", "2", "--alpha", "0.5"};
    for (auto& a : tiny_model()) args.push_back(a);
    ASSERT_EQ(run(args).code, 0);
    // Rerun from the written config alone, redirecting the output.
    auto r = run({"train", "--config", (dir / "r1" / "config.txt").string(), "--out", (dir / "r2").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(slurp(dir / "r1" / "loss.csv"), slurp(dir / "r2" / "loss.csv"));
    EXPECT_EQ(slurp(dir / "r1" / "checkpoint.json"), slurp(dir / "r2" / "checkpoint.json"));
    EXPECT_NE(slurp(dir / "r1" / "config.txt").find("alpha = 0.5"), std::string::npos);
}

TEST_F(Cli, AblationFlagsReachTheModel) {
    auto data = small_data();
    std::vector<std::string> args{"train", "--data", (data / "train.jsonl").string(), "--out",
                                  (dir / "ne").string(), "--epochs", "1", "--disable-neural-evolution"};
    for (auto& a : tiny_model()) args.push_back(a);
    ASSERT_EQ(run(args).code, 0);
    EXPECT_TRUE(load_checkpoint(dir / "ne" / "checkpoint.json").config().disable_neural_evolution);
    EXPECT_NE(slurp(dir / "ne" / "config.txt").find("disable_neural_evolution = true"), std::string::npos);
}

TEST_F(Cli, OracleDispatch) {
    auto data = small_data();
    const std::string test = (data / "test.jsonl").string();
    auto r = run({"evaluate", "--oracle", "hawkes", "--data", test, "--out", (dir / "o").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(slurp(dir / "o" / "metrics.json").find("\"model\": \"hawkes\""), std::string::npos);
    EXPECT_FALSE(fs::exists(dir / "o" / "attention.csv"));
    EXPECT_EQ(run({"gof", "--oracle", "poisson-mle", "--data", test, "--out", (dir / "p").string()}).code, 0);
    EXPECT_EQ(run({"gof", "--oracle", "nonsense", "--data", test, "--out", (dir / "q").string()}).code,
              kExitValidation);
}

TEST_F(Cli, SampleIsReproducible) {
    auto a = run({"sample", "--oracle", "hawkes", "--count", "30", "--set", "horizon=50", "--out",
                  (dir / "s1").string(), "--seed", "4"});
    auto b = run({"sample", "--oracle", "hawkes", "--count", "30", "--set", "horizon=50", "--out",
                  (dir / "s2").string(), "--seed", "4"});
    ASSERT_EQ(a.code, 0) << a.err;
    ASSERT_EQ(b.code, 0) << b.err;
    EXPECT_EQ(slurp(dir / "s1" / "samples.jsonl"), slurp(dir / "s2" / "samples.jsonl"));
}

TEST_F(Cli, NumericFailureExitCode) {
    auto data = small_data();
    Model m = Model::create(nextpp::testing::tiny_config(2), {}, 1);
    m.params().mutable_get("intensity.b") = Tensor(Shape{2}, 1e308);
    save_checkpoint(m, dir / "bad.json");
    auto r = run({"evaluate", "--checkpoint", (dir / "bad.json").string(), "--data",
                  (data / "test.jsonl").string(), "--out", (dir / "e").string()});
    EXPECT_EQ(r.code, kExitNumeric) << r.err;
}
