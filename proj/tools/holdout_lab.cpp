// holdout-lab: runs one experiment and writes its CSVs, timing.csv and
// manifest.txt to the output directory.
//
// Exit codes: 0 success, 1 runtime error, 2 bad configuration,
// 3 a verification or acceptance check failed.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "holdout/harness/experiments.hpp"

namespace {

using holdout::harness::ConfigError;
using holdout::harness::ExperimentConfig;
using holdout::harness::ExperimentKind;

struct Overrides {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output;
    std::optional<std::size_t> threads;
    std::optional<std::size_t> trials;
    std::vector<std::size_t> n, m, k, r;
    std::optional<std::size_t> subset_size;
    std::optional<double> temperature;
    std::vector<double> targets;
    std::optional<std::size_t> k_cap;
    std::optional<double> delta;
    std::optional<std::size_t> t;
    std::vector<std::string> attacks;
    std::string logits, labels;
    std::optional<std::string> format;
};

void add_common(CLI::App& cmd, Overrides& o) {
    cmd.add_option("--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
    cmd.add_option("--seed", o.seed, "master seed (required here or in the config)");
    cmd.add_option("--out", o.output, "output directory");
    cmd.add_option("--threads", o.threads, "worker threads; results do not depend on it");
    cmd.add_option("--trials", o.trials, "trials per cell");
    cmd.add_option("--n", o.n, "test-set sizes")->delimiter(',');
    cmd.add_option("--m", o.m, "class counts")->delimiter(',');
}

void add_k(CLI::App& cmd, Overrides& o) { cmd.add_option("--k", o.k, "query counts")->delimiter(','); }

ExperimentConfig resolve(ExperimentKind kind, const Overrides& o) {
    ExperimentConfig c = o.config_path.empty() ? ExperimentConfig{} : holdout::harness::load_config_file(o.config_path, kind);
    c.kind = kind;
    auto set = [](auto& field, const auto& value) {
        if (value) field = *value;
    };
    auto set_list = [](auto& field, const auto& value) {
        if (!value.empty()) field = value;
    };
    if (o.seed) c.seed = o.seed;
    set(c.output, o.output);
    set(c.threads, o.threads);
    set(c.trials, o.trials);
    set_list(c.n, o.n);
    set_list(c.m, o.m);
    set_list(c.k, o.k);
    set_list(c.r, o.r);
    set(c.subset_size, o.subset_size);
    set(c.temperature, o.temperature);
    set_list(c.targets, o.targets);
    set(c.k_cap, o.k_cap);
    set(c.delta, o.delta);
    set(c.t, o.t);
    set_list(c.attacks, o.attacks);
    if (!o.logits.empty()) c.logits_path = o.logits;
    if (!o.labels.empty()) c.labels_path = o.labels;
    set(c.format, o.format);
    holdout::harness::apply_defaults(c);
    holdout::harness::validate(c);
    return c;
}

int run(const ExperimentConfig& c) {
    const std::filesystem::path dir = c.output;
    std::filesystem::create_directories(dir);
    const auto result = holdout::harness::run_experiment(c, dir);
    holdout::harness::write_outputs(c, result, dir);
    for (const std::string& msg : result.messages) std::cout << msg << '\n';
    std::cout << holdout::harness::to_string(c.kind) << ": wrote " << result.tables.size() << " table(s) to "
              << dir.string() << '\n';
    if (!result.passed) {
        std::cerr << holdout::harness::to_string(c.kind) << ": checks FAILED\n";
        return 3;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive test-set reuse simulations"};
    app.set_version_flag("--version", std::string(holdout::harness::kToolVersion));
    app.require_subcommand(1);

    Overrides o;
    std::optional<ExperimentKind> chosen;
    auto sub = [&](ExperimentKind kind, const std::string& help) {
        CLI::App* cmd = app.add_subcommand(std::string(holdout::harness::to_string(kind)), help);
        add_common(*cmd, o);
        cmd->callback([&chosen, kind] { chosen = kind; });
        return cmd;
    };

    CLI::App* synth = sub(ExperimentKind::SynthBias, "naive-Bayes bias on uniform labels over an (n, m, k) grid");
    add_k(*synth, o);

    CLI::App* q2b = sub(ExperimentKind::QueriesToBias, "smallest k reaching a bias target, per m");
    q2b->add_option("--targets", o.targets, "bias targets")->delimiter(',');
    q2b->add_option("--k-cap", o.k_cap, "largest k searched; larger answers are censored");

    CLI::App* maj = sub(ExperimentKind::MajorityCompare, "naive Bayes against flip-then-majority, m = 2");
    add_k(*maj, o);

    CLI::App* heur = sub(ExperimentKind::Heuristics, "prior-based attacks against model logits");
    add_k(*heur, o);
    heur->add_option("--r", o.r, "top-R candidate sizes")->delimiter(',');
    heur->add_option("--subset-size", o.subset_size, "least-confident points attacked");
    heur->add_option("--temperature", o.temperature, "softmax temperature");
    heur->add_option("--logits", o.logits, "logits file (CSV or binary)");
    heur->add_option("--labels", o.labels, "one-based labels, one per line");

    CLI::App* bound = sub(ExperimentKind::BoundCheck, "empirical check of the bias upper bound");
    add_k(*bound, o);
    bound->add_option("--delta", o.delta, "failure probability");
    bound->add_option("--attacks", o.attacks, "nb, plurality, majority, linear-scan, guess")->delimiter(',');

    CLI::App* recon = sub(ExperimentKind::ReconstructDemo, "label reconstruction with point access");
    add_k(*recon, o);
    recon->add_option("--t", o.t, "number of points reconstructed");

    sub(ExperimentKind::Verify, "exact and Monte-Carlo checks of the attack lemmas");

    CLI::App* gen = sub(ExperimentKind::GenLogits, "write synthetic labels and logits");
    gen->add_option("--format", o.format, "bin or csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        return run(resolve(*chosen, o));
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const holdout::InputError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
