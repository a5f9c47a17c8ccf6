#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "holdout/harness/experiments.hpp"

using namespace holdout;
using namespace holdout::harness;

namespace {

ExperimentConfig small_config(ExperimentKind kind) {
    ExperimentConfig c;
    c.kind = kind;
    c.seed = 2024;
    c.trials = 3;
    switch (kind) {
        case ExperimentKind::SynthBias:
            c.n = {500, 800};
            c.m = {2, 5};
            c.k = {10, 40};
            break;
        case ExperimentKind::QueriesToBias:
            c.n = {2000};
            c.m = {2, 4};
            c.targets = {0.02, 0.04};
            c.k_cap = 4096;
            break;
        case ExperimentKind::MajorityCompare:
            c.n = {600};
            c.k = {16, 64};
            break;
        case ExperimentKind::Heuristics:
            c.n = {2000};
            c.m = {50};
            c.k = {150};
            c.r = {2, 4};
            c.subset_size = 400;
            c.trials = 2;
            break;
        case ExperimentKind::BoundCheck:
            c.n = {300};
            c.m = {2, 3};
            c.k = {10};
            c.attacks = {"nb", "plurality", "majority", "linear-scan", "guess"};
            c.trials = 20;
            break;
        case ExperimentKind::ReconstructDemo:
            c.trials = 20;
            break;
        case ExperimentKind::Verify:
        case ExperimentKind::GenLogits:
            c.n = {300};
            c.m = {20};
            break;
    }
    apply_defaults(c);
    validate(c);
    return c;
}

std::string serialize(const ExperimentResult& r) {
    std::ostringstream out;
    for (const CsvTable& t : r.tables) {
        out << "== " << t.file << '\n';
        write_csv(out, t);
    }
    return out.str();
}

const CsvTable& find_table(const ExperimentResult& r, const std::string& file) {
    for (const CsvTable& t : r.tables) {
        if (t.file == file) return t;
    }
    throw std::runtime_error("missing table " + file);
}

std::size_t column(const CsvTable& t, const std::string& name) {
    for (std::size_t i = 0; i < t.header.size(); ++i) {
        if (t.header[i] == name) return i;
    }
    throw std::runtime_error("missing column " + name + " in " + t.file);
}

std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("holdout_test_" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

}  // namespace

// Columns the plotting scripts read.
TEST(CsvSchema, FigureColumnsPresent) {
    const std::map<ExperimentKind, std::pair<std::string, std::vector<std::string>>> schema = {
        {ExperimentKind::SynthBias, {"synth_bias.csv", {"n", "m", "k", "trials", "mean_bias", "sd_bias", "se_bias"}}},
        {ExperimentKind::QueriesToBias,
         {"queries_to_bias_slopes.csv", {"n", "target", "endpoint_slope", "lsq_slope", "censored_cells"}}},
        {ExperimentKind::MajorityCompare,
         {"majority_compare.csv", {"n", "k", "nb_mean_bias", "nb_se", "majority_mean_bias", "majority_se"}}},
        {ExperimentKind::Heuristics, {"heuristics.csv", {"arm", "r", "k", "mean_boost", "sd_boost", "se_boost"}}},
    };
    for (const auto& [kind, spec] : schema) {
        const ExperimentResult r = run_experiment(small_config(kind));
        const CsvTable& t = find_table(r, spec.first);
        for (const std::string& col : spec.second) EXPECT_NO_THROW(column(t, col)) << spec.first << ": " << col;
        EXPECT_FALSE(t.rows.empty()) << spec.first;
        for (const auto& row : t.rows) EXPECT_EQ(row.size(), t.header.size());
    }
    const ExperimentResult q = run_experiment(small_config(ExperimentKind::QueriesToBias));
    const CsvTable& cells = find_table(q, "queries_to_bias.csv");
    for (const char* col : {"n", "target", "m", "k", "censored"}) EXPECT_NO_THROW(column(cells, col));
}

TEST(CsvSchema, TrialRecordsCarryRequiredFields) {
    const ExperimentResult r = run_experiment(small_config(ExperimentKind::SynthBias));
    const CsvTable& t = find_table(r, "synth_bias_trials.csv");
    EXPECT_EQ(t.header, kTrialHeader);
    EXPECT_EQ(t.rows.size(), 2u * 2u * 2u * 3u);
}

TEST(Records, BiasIsExactlyAccuracyMinusChance) {
    const ExperimentResult r = run_experiment(small_config(ExperimentKind::SynthBias));
    const CsvTable& t = find_table(r, "synth_bias_trials.csv");
    const std::size_t cn = column(t, "n"), cm = column(t, "m"), cmatch = column(t, "matches"), cb = column(t, "bias");
    for (const auto& row : t.rows) {
        const std::size_t n = std::stoul(row[cn]), m = std::stoul(row[cm]), matches = std::stoul(row[cmatch]);
        const Rational exact = Rational(static_cast<std::int64_t>(matches), static_cast<std::int64_t>(n)) -
                               Rational(1, static_cast<std::int64_t>(m));
        EXPECT_EQ(std::stod(row[cb]), exact.to_double());
        EXPECT_LE(std::stod(row[cb]), 1.0 - 1.0 / static_cast<double>(m));
    }
}

TEST(Records, TrialsShareLabelsAcrossK) {
    const ExperimentResult r = run_experiment(small_config(ExperimentKind::SynthBias));
    const CsvTable& t = find_table(r, "synth_bias_trials.csv");
    std::map<std::tuple<std::string, std::string, std::string>, std::set<std::string>> seeds;
    for (const auto& row : t.rows) seeds[{row[0], row[1], row[3]}].insert(row[4]);
    for (const auto& [key, s] : seeds) EXPECT_EQ(s.size(), 1u);
}

class Reproducible : public ::testing::TestWithParam<ExperimentKind> {};

TEST_P(Reproducible, ThreadCountDoesNotChangeOutput) {
    ExperimentConfig one = small_config(GetParam());
    ExperimentConfig eight = one;
    one.threads = 1;
    eight.threads = 8;
    EXPECT_EQ(serialize(run_experiment(one)), serialize(run_experiment(eight)));
    EXPECT_EQ(config_hash(one), config_hash(eight));
}

INSTANTIATE_TEST_SUITE_P(AllKinds, Reproducible,
                         ::testing::Values(ExperimentKind::SynthBias, ExperimentKind::QueriesToBias,
                                           ExperimentKind::MajorityCompare, ExperimentKind::Heuristics,
                                           ExperimentKind::BoundCheck, ExperimentKind::ReconstructDemo),
                         [](const auto& info) {
                             std::string name(to_string(info.param));
                             std::erase(name, '-');
                             return name;
                         });

TEST(Reproducible, DifferentSeedsDiffer) {
    ExperimentConfig a = small_config(ExperimentKind::SynthBias);
    ExperimentConfig b = a;
    b.seed = 2025;
    EXPECT_NE(serialize(run_experiment(a)), serialize(run_experiment(b)));
}

TEST(QueriesToBias, SearchFindsSmallestCrossing) {
    std::size_t calls = 0;
    auto eval = [&](std::size_t k) {
        ++calls;
        return BiasPoint{k, k >= 37 ? 1.0 : 0.0, 0.0};
    };
    const auto hit = smallest_k_reaching(0.5, 1000, eval);
    ASSERT_TRUE(hit);
    EXPECT_EQ(hit->k, 37u);
    EXPECT_LT(calls, 20u);
    EXPECT_FALSE(smallest_k_reaching(0.5, 20, eval));
}

TEST(QueriesToBias, RequiredKDoesNotDecreaseWithM) {
    const ExperimentResult r = run_experiment(small_config(ExperimentKind::QueriesToBias));
    const CsvTable& t = find_table(r, "queries_to_bias.csv");
    const std::size_t ct = column(t, "target"), cm = column(t, "m"), ck = column(t, "k");
    std::map<std::string, std::map<std::size_t, std::size_t>> by_target;
    for (const auto& row : t.rows) by_target[row[ct]][std::stoul(row[cm])] = std::stoul(row[ck]);
    for (const auto& [target, ks] : by_target) EXPECT_LE(ks.at(2), ks.at(4)) << target;
}

TEST(Heuristics, RestrictedArmsRespectCeiling) {
    const ExperimentResult r = run_experiment(small_config(ExperimentKind::Heuristics));
    EXPECT_TRUE(r.passed);
    const CsvTable& t = find_table(r, "heuristics_trials.csv");
    const std::size_t ca = column(t, "accuracy"), cc = column(t, "accuracy_cap");
    for (const auto& row : t.rows) EXPECT_LE(std::stod(row[ca]), std::stod(row[cc]) + 1e-12);
}

TEST(Config, ValidationErrors) {
    ExperimentConfig c = small_config(ExperimentKind::SynthBias);
    c.seed.reset();
    EXPECT_THROW(validate(c), ConfigError);
    c = small_config(ExperimentKind::SynthBias);
    c.trials = 0;
    EXPECT_THROW(validate(c), ConfigError);
    c = small_config(ExperimentKind::SynthBias);
    c.m = {1};
    EXPECT_THROW(validate(c), ConfigError);
    c = small_config(ExperimentKind::MajorityCompare);
    c.m = {3};
    EXPECT_THROW(validate(c), ConfigError);
    c = small_config(ExperimentKind::Heuristics);
    c.logits_path = "x.csv";
    EXPECT_THROW(validate(c), ConfigError);
}

TEST(Config, JsonParsing) {
    const auto j = nlohmann::json::parse(R"({"experiment": "synth-bias", "seed": 5, "n": [100], "m": [2], "k": [3],
                                             "recall": [[2, 0.8]]})");
    const ExperimentConfig c = config_from_json(j);
    EXPECT_EQ(c.kind, ExperimentKind::SynthBias);
    EXPECT_EQ(*c.seed, 5u);
    ASSERT_EQ(c.recall.size(), 1u);
    EXPECT_EQ(c.recall[0].r, 2u);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"experiment": "synth-bias", "sede": 5})")), ConfigError);
    EXPECT_THROW(config_from_json(j, ExperimentKind::Verify), ConfigError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"experiment": "nope"})")), ConfigError);
}

TEST(Csv, QuotingAndSplitting) {
    EXPECT_EQ(quote_cell("plain"), "plain");
    EXPECT_EQ(quote_cell("a,b"), "\"a,b\"");
    EXPECT_EQ(quote_cell("say \"hi\""), "\"say \"\"hi\"\"\"");
    EXPECT_EQ(split_csv_line("a,\"b,c\",\"d\"\"e\""), (std::vector<std::string>{"a", "b,c", "d\"e"}));
    EXPECT_EQ(fmt(0.1), "0.1");
    EXPECT_EQ(std::stod(fmt(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Stats, SummaryAndSlope) {
    const std::vector<double> xs = {1, 2, 3, 4};
    const Summary s = summarize(xs);
    EXPECT_DOUBLE_EQ(s.mean, 2.5);
    EXPECT_NEAR(s.sd, std::sqrt(5.0 / 3.0), 1e-15);
    EXPECT_NEAR(s.se, s.sd / 2.0, 1e-15);
    const std::vector<double> y = {3, 5, 7, 9};
    EXPECT_NEAR(ols_slope(xs, y), 2.0, 1e-15);
}

TEST(Pool, RethrowsWorkerException) {
    EXPECT_THROW(parallel_for(10, 4, [](std::size_t i) {
                     if (i == 7) throw std::runtime_error("boom");
                 }),
                 std::runtime_error);
}

TEST(Outputs, ManifestAndTimingSidecar) {
    const ExperimentConfig c = small_config(ExperimentKind::MajorityCompare);
    const auto dir = scratch_dir("outputs");
    write_outputs(c, run_experiment(c), dir);
    for (const char* f : {"majority_compare.csv", "majority_compare_trials.csv", "timing.csv", "manifest.txt"}) {
        EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
    }
    std::ifstream manifest(dir / "manifest.txt");
    const std::string text((std::istreambuf_iterator<char>(manifest)), std::istreambuf_iterator<char>());
    EXPECT_NE(text.find("seed: 2024"), std::string::npos);
    EXPECT_NE(text.find("config_hash: fnv1a64:"), std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST(Outputs, GenLogitsFeedsHeuristics) {
    const auto dir = scratch_dir("genlogits");
    std::filesystem::create_directories(dir);
    ExperimentConfig gen = small_config(ExperimentKind::GenLogits);
    gen.format = "csv";
    const ExperimentResult g = run_experiment(gen, dir);
    EXPECT_TRUE(std::filesystem::exists(dir / "logits.csv"));
    const CsvTable& recalls = find_table(g, "gen_logits.csv");
    EXPECT_EQ(recalls.rows.size(), 4u);

    ExperimentConfig h = small_config(ExperimentKind::Heuristics);
    h.logits_path = (dir / "logits.csv").string();
    h.labels_path = (dir / "labels.txt").string();
    h.n = {300};
    h.m = {20};
    h.subset_size = 100;
    validate(h);
    const ExperimentResult r = run_experiment(h);
    EXPECT_EQ(find_table(r, "heuristics_logits.csv").rows.front()[2], "300");
    std::filesystem::remove_all(dir);
}

#ifdef HOLDOUT_LAB_BIN
namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(HOLDOUT_LAB_BIN) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Cli, ExitCodes) {
    const auto dir = scratch_dir("cli");
    EXPECT_EQ(run_cli("synth-bias --n 200 --m 2 --k 5 --trials 2 --out " + dir.string()), 2);  // no seed
    EXPECT_EQ(run_cli("synth-bias --seed 1 --n 200 --m 2 --k 5 --trials 2 --out " + dir.string()), 0);
    EXPECT_TRUE(std::filesystem::exists(dir / "synth_bias.csv"));
    EXPECT_EQ(run_cli("majority-compare --seed 1 --m 3 --out " + dir.string()), 2);
    EXPECT_EQ(run_cli("no-such-command"), 2);
    std::filesystem::remove_all(dir);
}

TEST(Cli, ConfigFileAndOverride) {
    const auto dir = scratch_dir("cli_config");
    std::filesystem::create_directories(dir);
    {
        std::ofstream cfg(dir / "cfg.json");
        cfg << R"({"experiment": "reconstruct-demo", "seed": 3, "trials": 5})";
    }
    EXPECT_EQ(run_cli("reconstruct-demo --config " + (dir / "cfg.json").string() + " --out " + (dir / "a").string()), 0);
    EXPECT_EQ(run_cli("reconstruct-demo --config " + (dir / "cfg.json").string() + " --threads 4 --out " +
                      (dir / "b").string()),
              0);
    std::ifstream a(dir / "a" / "reconstruct_demo_trials.csv"), b(dir / "b" / "reconstruct_demo_trials.csv");
    const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
    EXPECT_FALSE(sa.empty());
    EXPECT_EQ(sa, sb);
    EXPECT_EQ(run_cli("synth-bias --config " + (dir / "cfg.json").string() + " --out " + (dir / "c").string()), 2);
    std::filesystem::remove_all(dir);
}
#endif
