#include "nextpp/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include <nlohmann/json.hpp>

#include "nextpp/baselines.hpp"
#include "nextpp/checkpoint.hpp"
#include "nextpp/config.hpp"
#include "nextpp/errors.hpp"
#include "nextpp/interaction.hpp"
#include "nextpp/metrics.hpp"
#include "nextpp/sampling.hpp"
#include "nextpp/training.hpp"

namespace nextpp {

namespace fs = std::filesystem;

namespace {

// Raw command-line values; applied on top of the config file.
struct Overrides {
    std::string config_path;
    std::vector<std::pair<std::string, std::string>> values;
    std::vector<std::string> assignments;
    bool disable_ne = false;
    bool disable_ca = false;
};

void bind(CLI::App* sub, Overrides& o, const std::string& flag, const std::string& key,
          const std::string& help) {
    sub->add_option_function<std::string>(
        flag, [&o, key](const std::string& v) { o.values.emplace_back(key, v); }, help);
}

void add_common(CLI::App* sub, Overrides& o) {
    sub->add_option("--config", o.config_path, "key = value config file");
    bind(sub, o, "--seed", "seed", "random seed");
    bind(sub, o, "--out", "out", "output directory");
    bind(sub, o, "--alpha", "alpha", "block ratio (1/alpha events per evolution block)");
    bind(sub, o, "--epochs", "epochs", "training epochs");
    bind(sub, o, "--lr", "lr", "learning rate");
    sub->add_flag("--disable-neural-evolution", o.disable_ne, "ablation: C = A");
    sub->add_flag("--disable-cross-attention", o.disable_ca, "ablation: C = O");
    sub->add_option("--set", o.assignments, "extra key=value overrides");
}

RunConfig resolve(const Overrides& o) {
    RunConfig cfg = o.config_path.empty() ? RunConfig() : RunConfig::from_file(o.config_path);
    for (const auto& [k, v] : o.values) cfg.set(k, v);
    for (const auto& a : o.assignments) cfg.set_assignment(a);
    if (o.disable_ne) cfg.set("disable_neural_evolution", "true");
    if (o.disable_ca) cfg.set("disable_cross_attention", "true");
    return cfg;
}

fs::path prepare_out(const RunConfig& cfg) {
    fs::path out = cfg.str("out");
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());
    cfg.write(out / "config.txt");
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    f << text;
}

const std::string& require(const RunConfig& cfg, const std::string& key) {
    const std::string& v = cfg.get(key);
    if (v.empty()) throw CLI::RequiredError("--" + key);
    return v;
}

Dataset load_valid(const fs::path& path, std::size_t expected_marks = 0) {
    Dataset data = load_jsonl(path);
    const std::size_t M = expected_marks ? expected_marks : data.mark_count;
    if (expected_marks && data.mark_count > expected_marks) {
        throw ValidationError(path.string() + " declares " + std::to_string(data.mark_count) +
                              " marks; the model has " + std::to_string(expected_marks));
    }
    for (std::size_t i = 0; i < data.sequences.size(); ++i) {
        try {
            validate_sequence(data.sequences[i], M);
        } catch (const ValidationError& e) {
            throw ValidationError(path.string() + " sequence " + std::to_string(i) + ": " + e.what());
        }
    }
    return data;
}

// A trained checkpoint, or an analytic process selected by tag.
struct Source {
    std::optional<Model> model;
    std::unique_ptr<PointProcess> process;
};

void require_source(const RunConfig& cfg) {
    if (cfg.get("checkpoint").empty() && cfg.get("oracle").empty()) {
        throw CLI::RequiredError("--checkpoint or --oracle");
    }
}

Source open_source(const RunConfig& cfg, const Dataset* data) {
    Source s;
    const std::string& ckpt = cfg.get("checkpoint");
    const std::string& oracle = cfg.get("oracle");
    if (!ckpt.empty() && !oracle.empty()) throw CLI::ValidationError("give either --checkpoint or --oracle");
    if (!ckpt.empty()) {
        s.model = load_checkpoint(ckpt);
        s.process = std::make_unique<NeuralProcess>(*s.model, cfg.count("eval_points"));
    } else if (oracle == "hawkes") {
        s.process = std::make_unique<HawkesProcess>(cfg.hawkes_params());
    } else if (oracle == "poisson") {
        s.process = std::make_unique<PoissonProcess>(cfg.poisson_params());
    } else if (oracle == "poisson-mle") {
        if (!data) throw CLI::ValidationError("--oracle poisson-mle needs --data");
        s.process = std::make_unique<PoissonProcess>(fit_poisson(*data));
    } else if (oracle.empty()) {
        throw CLI::RequiredError("--checkpoint or --oracle");
    } else {
        throw ValidationError("unknown oracle '" + oracle + "' (hawkes, poisson, poisson-mle)");
    }
    return s;
}

int cmd_generate(const RunConfig& cfg, std::ostream& out) {
    const std::string& kind = cfg.get("kind");
    Rng rng(cfg.u64("seed"));
    const double T = cfg.real("T");
    auto make = [&](std::size_t n) {
        if (kind == "hawkes") {
            auto p = cfg.hawkes_params();
            return generate_hawkes(p, T, n, rng);
        }
        if (kind == "poisson") return generate_poisson(cfg.poisson_params(), T, n, rng);
        throw ValidationError("unknown generator kind '" + kind + "' (poisson, hawkes)");
    };
    if (!(T > 0.0)) throw ValidationError("T must be positive");
    if (kind == "hawkes") cfg.hawkes_params();
    const fs::path dir = prepare_out(cfg);
    std::string stats_text;
    const std::pair<const char*, std::size_t> splits[] = {
        {"train", cfg.count("n_train")}, {"dev", cfg.count("n_dev")}, {"test", cfg.count("n_test")}};
    for (const auto& [name, n] : splits) {
        if (n == 0) continue;
        Dataset d = make(n);
        d.split = split_from_string(name);
        save_jsonl(d, dir / (std::string(name) + ".jsonl"));
        if (!d.sequences.empty()) stats_text += format_stats(stats(d), name);
    }
    write_text(dir / "stats.txt", stats_text);
    out << stats_text;
    return kExitOk;
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
    const Dataset train_data = load_valid(require(cfg, "data"));
    std::optional<Dataset> dev;
    if (!cfg.get("dev").empty()) dev = load_valid(cfg.get("dev"), train_data.mark_count);
    TrainConfig tc = cfg.train_config(train_data.mark_count);
    const fs::path dir = prepare_out(cfg);
    tc.checkpoint_path = dir / "checkpoint.json";

    auto report = [&](std::size_t epoch, const LossBreakdown& l) {
        out << "epoch " << epoch << " total/event " << l.total << " mle " << l.mle << " kl " << l.kl
            << " cont " << l.cont << std::endl;
    };
    TrainRun run = train(train_data, tc, std::nullopt, report);
    write_text(dir / "loss.csv", loss_trace_csv(run.trace));
    if (dev) {
        const double ll = mean_loglik_per_event(run.model, *dev, cfg.count("eval_points"));
        nlohmann::ordered_json j;
        j["dev_loglik_per_event"] = ll;
        write_text(dir / "dev.json", j.dump(2) + "\n");
        out << "dev loglik/event " << ll << "\n";
    }
    return kExitOk;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& out) {
    require_source(cfg);
    Dataset data = load_jsonl(require(cfg, "data"));
    Source src = open_source(cfg, &data);
    data = load_valid(cfg.get("data"), src.process->mark_count());
    const ThinningConfig th = cfg.thinning_config(default_horizon(data));
    const fs::path dir = prepare_out(cfg);
    Evaluation ev = evaluate_model(*src.process, data, th);
    write_text(dir / "metrics.json", report_json(ev.report));
    write_text(dir / "metrics.txt", report_text(ev.report));
    write_text(dir / "predictions.csv", predictions_csv(ev.predictions));
    if (src.model) {
        // Attention maps of the first test sequence.
        Tape tape(&src.model->params());
        auto fwd = src.model->forward(tape, data.sequences.front(), ForwardMode::evaluation, nullptr);
        export_attention(fwd.cross_weights, dir / "attention.csv");
        export_attention(fwd.self_weights, dir / "attention_self.csv");
    }
    out << report_text(ev.report);
    return kExitOk;
}

int cmd_sample(const RunConfig& cfg, std::ostream& out) {
    Source src = open_source(cfg, nullptr);
    const std::size_t M = src.process->mark_count();
    Dataset prefixes;
    prefixes.mark_count = M;
    if (!cfg.get("prefix").empty()) {
        prefixes = load_valid(cfg.get("prefix"), M);
        prefixes.mark_count = M;
    } else {
        prefixes.sequences.emplace_back();
    }
    double horizon = 0.0;
    if (cfg.get("horizon") == "auto") {
        bool usable = false;
        for (const auto& s : prefixes.sequences) usable = usable || s.size() >= 1;
        if (!usable) throw ValidationError("horizon = auto needs a non-empty prefix; set horizon");
        horizon = default_horizon(prefixes);
    }
    const ThinningConfig th = cfg.thinning_config(horizon);
    const std::size_t count = cfg.count("count");
    if (count < 1) throw ValidationError("count must be >= 1");
    const fs::path dir = prepare_out(cfg);
    Rng rng(cfg.u64("seed"));
    Dataset result;
    result.mark_count = M;
    std::size_t generated = 0;
    for (const auto& prefix : prefixes.sequences) {
        auto s = simulate(*src.process, prefix, count, th, rng);
        EventSequence full = prefix;
        for (const Event& e : s.events) full.push_back(e);
        generated += s.events.size();
        if (!full.empty()) result.sequences.push_back(std::move(full));
    }
    save_jsonl(result, dir / "samples.jsonl");
    out << "generated " << generated << " events across " << prefixes.sequences.size() << " sequences\n";
    return kExitOk;
}

int cmd_gof(const RunConfig& cfg, std::ostream& out) {
    require_source(cfg);
    Dataset data = load_jsonl(require(cfg, "data"));
    Source src = open_source(cfg, &data);
    data = load_valid(cfg.get("data"), src.process->mark_count());
    const GofResult g = time_rescaling_gof(*src.process, data);
    const fs::path dir = prepare_out(cfg);
    nlohmann::ordered_json j;
    j["model"] = src.process->name();
    j["ks_statistic"] = g.statistic;
    j["p_value"] = g.p_value;
    j["n"] = g.n;
    j["informative"] = g.informative;
    write_text(dir / "gof.json", j.dump(2) + "\n");
    out << "ks statistic " << g.statistic << " p-value " << g.p_value << " n " << g.n << "\n";
    return kExitOk;
}

int cmd_inspect(const RunConfig& cfg, std::ostream& out) {
    const fs::path path = require(cfg, "data");
    const Dataset data = load_valid(path);
    std::string label = to_string(data.split);
    if (label.empty()) label = path.filename().string();
    out << format_stats(stats(data), label);
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Marked temporal point process toolkit", "nextpp"};
    app.require_subcommand(1);
    Overrides o;

    auto* gen = app.add_subcommand("generate", "synthetic Poisson or Hawkes dataset");
    add_common(gen, o);
    gen->add_option_function<std::string>(
        "kind", [&o](const std::string& v) { o.values.emplace_back("kind", v); }, "poisson | hawkes");

    auto* tr = app.add_subcommand("train", "train a model");
    auto* ev = app.add_subcommand("evaluate", "metrics, predictions and attention maps");
    auto* sa = app.add_subcommand("sample", "simulate continuations by thinning");
    auto* gf = app.add_subcommand("gof", "time-rescaling goodness of fit");
    auto* in = app.add_subcommand("inspect", "dataset statistics");
    for (auto* sub : {tr, ev, sa, gf, in}) add_common(sub, o);
    for (auto* sub : {tr, ev, gf, in}) bind(sub, o, "--data", "data", "events JSONL");
    bind(tr, o, "--dev", "dev", "held-out JSONL scored after training");
    for (auto* sub : {ev, sa, gf}) {
        bind(sub, o, "--checkpoint", "checkpoint", "trained checkpoint");
        bind(sub, o, "--oracle", "oracle", "hawkes | poisson | poisson-mle");
    }
    bind(sa, o, "--prefix", "prefix", "JSONL of conditioning prefixes");
    bind(sa, o, "--count", "count", "events to generate per prefix");

    std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        const RunConfig cfg = resolve(o);
        if (gen->parsed()) return cmd_generate(cfg, out);
        if (tr->parsed()) return cmd_train(cfg, out);
        if (ev->parsed()) return cmd_evaluate(cfg, out);
        if (sa->parsed()) return cmd_sample(cfg, out);
        if (gf->parsed()) return cmd_gof(cfg, out);
        if (in->parsed()) return cmd_inspect(cfg, out);
    } catch (const CLI::Error& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitUsage;
}

}  // namespace nextpp
