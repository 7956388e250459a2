#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "nextpp/baselines.hpp"
#include "nextpp/checkpoint.hpp"
#include "nextpp/cli.hpp"
#include "nextpp/errors.hpp"
#include "nextpp/events.hpp"
#include "nextpp/metrics.hpp"
#include "nextpp/model.hpp"
#include "nextpp/sampling.hpp"
#include "nextpp/training.hpp"

namespace py = pybind11;
using namespace nextpp;

namespace {

ThinningConfig thinning(double horizon, std::size_t grid_points) {
    ThinningConfig c;
    c.horizon = horizon;
    c.bound_grid_points = grid_points;
    c.validate();
    return c;
}

py::dict loss_dict(const LossBreakdown& l) {
    py::dict d;
    d["mle"] = l.mle;
    d["kl"] = l.kl;
    d["cont"] = l.cont;
    d["total"] = l.total;
    d["events"] = l.events;
    return d;
}

std::vector<std::pair<double, std::size_t>> event_pairs(const std::vector<Event>& events) {
    std::vector<std::pair<double, std::size_t>> out;
    for (const auto& e : events) out.emplace_back(e.time, e.mark);
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Marked temporal point processes with a neural-ODE / attention intensity model";
    m.attr("__version__") = "0.1.0";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
    py::register_exception<ParseError>(m, "ParseError", base.ptr());
    py::register_exception<NumericError>(m, "NumericError", base.ptr());
    py::register_exception<ContractError>(m, "ContractError", base.ptr());

    py::class_<EventSequence>(m, "EventSequence")
        .def(py::init<>())
        .def(py::init<const std::vector<double>&, const std::vector<std::size_t>&>(), py::arg("times"),
             py::arg("marks"))
        .def("__len__", &EventSequence::size)
        .def("__getitem__",
             [](const EventSequence& s, std::size_t i) {
                 if (i >= s.size()) throw py::index_error();
                 return std::make_pair(s[i].time, s[i].mark);
             })
        .def("__eq__", [](const EventSequence& a, const EventSequence& b) { return a == b; })
        .def_property_readonly("times", &EventSequence::times)
        .def_property_readonly("marks", &EventSequence::marks)
        .def("prefix", &EventSequence::prefix)
        .def("__repr__", [](const EventSequence& s) {
            return "<EventSequence with " + std::to_string(s.size()) + " events>";
        });

    py::class_<Dataset>(m, "Dataset")
        .def(py::init<>())
        .def(py::init([](std::size_t mark_count, std::vector<EventSequence> seqs) {
                 Dataset d;
                 d.mark_count = mark_count;
                 d.sequences = std::move(seqs);
                 for (const auto& s : d.sequences) validate_sequence(s, mark_count);
                 return d;
             }),
             py::arg("mark_count"), py::arg("sequences"))
        .def_readwrite("mark_count", &Dataset::mark_count)
        .def_readwrite("sequences", &Dataset::sequences)
        .def_property_readonly("event_count", &Dataset::event_count)
        .def("__len__", [](const Dataset& d) { return d.sequences.size(); })
        .def("__eq__", [](const Dataset& a, const Dataset& b) { return a == b; })
        .def("to_jsonl", [](const Dataset& d) { return to_jsonl(d); });

    m.def("load_jsonl", &load_jsonl, py::arg("path"));
    m.def("parse_jsonl", &parse_jsonl, py::arg("text"));
    m.def("save_jsonl", &save_jsonl, py::arg("data"), py::arg("path"));
    m.def(
        "stats",
        [](const Dataset& d) {
            const DatasetStats s = stats(d);
            py::dict out;
            out["mark_count"] = s.mark_count;
            out["sequence_count"] = s.sequence_count;
            out["token_count"] = s.token_count;
            out["min_length"] = s.min_length;
            out["max_length"] = s.max_length;
            out["mean_length"] = s.mean_length;
            out["mark_counts"] = s.mark_counts;
            out["total_duration"] = s.total_duration;
            return out;
        },
        py::arg("data"));

    py::class_<PoissonParams>(m, "PoissonParams")
        .def(py::init([](std::vector<double> rates) {
                 PoissonParams p{std::move(rates)};
                 p.validate();
                 return p;
             }),
             py::arg("rates"))
        .def_readonly("rates", &PoissonParams::rates);

    py::class_<HawkesParams>(m, "HawkesParams")
        .def(py::init([](std::vector<double> b, std::vector<std::vector<double>> a, double decay) {
                 HawkesParams p{std::move(b), std::move(a), decay};
                 p.validate();
                 return p;
             }),
             py::arg("base"), py::arg("excitation"), py::arg("decay"))
        .def_static("benchmark", &HawkesParams::benchmark)
        .def_readonly("base", &HawkesParams::base)
        .def_readonly("excitation", &HawkesParams::excitation)
        .def_readonly("decay", &HawkesParams::decay)
        .def("spectral_radius", &HawkesParams::spectral_radius);

    m.def(
        "generate_poisson",
        [](const PoissonParams& p, double horizon, std::size_t n, std::uint64_t seed) {
            Rng rng(seed);
            return generate_poisson(p, horizon, n, rng);
        },
        py::arg("params"), py::arg("horizon"), py::arg("n_seqs"), py::arg("seed") = 1);
    m.def(
        "generate_hawkes",
        [](const HawkesParams& p, double horizon, std::size_t n, std::uint64_t seed) {
            Rng rng(seed);
            return generate_hawkes(p, horizon, n, rng);
        },
        py::arg("params"), py::arg("horizon"), py::arg("n_seqs"), py::arg("seed") = 1);
    m.def("fit_poisson", &fit_poisson, py::arg("data"));
    m.def(
        "poisson_loglik", [](const PoissonParams& p, const Dataset& d) { return oracle_loglik(d, PoissonProcess(p)); },
        py::arg("params"), py::arg("data"), "Mean log-likelihood per event.");
    m.def(
        "hawkes_loglik", [](const HawkesParams& p, const Dataset& d) { return oracle_loglik(d, HawkesProcess(p)); },
        py::arg("params"), py::arg("data"), "Mean log-likelihood per event.");

    py::class_<ModelConfig>(m, "ModelConfig")
        .def(py::init<>())
        .def_readwrite("mark_count", &ModelConfig::mark_count)
        .def_readwrite("model_dim", &ModelConfig::model_dim)
        .def_readwrite("latent_dim", &ModelConfig::latent_dim)
        .def_readwrite("heads", &ModelConfig::heads)
        .def_readwrite("layers", &ModelConfig::layers)
        .def_readwrite("dropout", &ModelConfig::dropout)
        .def_readwrite("ode_steps", &ModelConfig::ode_steps)
        .def_readwrite("alpha", &ModelConfig::block_ratio)
        .def_readwrite("disable_neural_evolution", &ModelConfig::disable_neural_evolution)
        .def_readwrite("disable_cross_attention", &ModelConfig::disable_cross_attention)
        .def("validate", &ModelConfig::validate);

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("model", &TrainConfig::model)
        .def_readwrite("learning_rate", &TrainConfig::learning_rate)
        .def_readwrite("epochs", &TrainConfig::epochs)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("mc_samples", &TrainConfig::mc_samples)
        .def_readwrite("seed", &TrainConfig::seed)
        .def_property(
            "integrator", [](const TrainConfig& c) { return to_string(c.integrator); },
            [](TrainConfig& c, const std::string& s) { c.integrator = integrator_from_string(s); })
        .def_readwrite("checkpoint_path", &TrainConfig::checkpoint_path);

    py::class_<Model>(m, "Model")
        .def_static(
            "create",
            [](const ModelConfig& cfg, std::vector<double> rates, std::uint64_t seed) {
                return Model::create(cfg, rates, seed);
            },
            py::arg("config"), py::arg("initial_rates") = std::vector<double>{}, py::arg("seed") = 1)
        .def_static("load", py::overload_cast<const std::filesystem::path&>(&load_checkpoint), py::arg("path"))
        .def("save", [](const Model& mdl, const std::filesystem::path& p) { save_checkpoint(mdl, p); },
             py::arg("path"))
        .def_property_readonly("config", &Model::config)
        .def_property_readonly("parameter_count",
                               [](const Model& mdl) {
                                   std::size_t n = 0;
                                   for (std::size_t i = 0; i < mdl.params().size(); ++i) n += mdl.params().get(i).size();
                                   return n;
                               })
        .def(
            "loglik", [](const Model& mdl, const Dataset& d) { return mean_loglik_per_event(mdl, d); },
            py::arg("data"), "Mean held-out log-likelihood per event (evaluation mode).")
        .def(
            "predict_next",
            [](const Model& mdl, const EventSequence& history, double horizon, std::size_t grid) {
                NeuralProcess p(mdl);
                auto r = predict_next(*p.state_after(history), thinning(horizon, grid));
                return py::make_tuple(r.time, r.mark, r.mark_mass);
            },
            py::arg("history"), py::arg("horizon") = 10.0, py::arg("grid_points") = 64,
            "(time, mark, mark_mass) of the next event after `history`.")
        .def(
            "simulate",
            [](const Model& mdl, const EventSequence& prefix, std::size_t count, double horizon,
               std::uint64_t seed) {
                NeuralProcess p(mdl);
                Rng rng(seed);
                return event_pairs(simulate(p, prefix, count, thinning(horizon, 64), rng).events);
            },
            py::arg("prefix"), py::arg("count"), py::arg("horizon") = 10.0, py::arg("seed") = 1)
        .def(
            "gof",
            [](const Model& mdl, const Dataset& d) {
                auto g = time_rescaling_gof(NeuralProcess(mdl), d);
                return py::make_tuple(g.statistic, g.p_value, g.n);
            },
            py::arg("data"), "(KS statistic, p-value, n) of the time-rescaled gaps.");

    m.def(
        "train",
        [](const Dataset& d, const TrainConfig& cfg, std::function<void(std::size_t, py::dict)> on_epoch) {
            EpochCallback cb;
            if (on_epoch) cb = [&](std::size_t e, const LossBreakdown& l) { on_epoch(e, loss_dict(l)); };
            TrainRun run = train(d, cfg, {}, cb);
            py::list trace;
            for (const auto& l : run.trace) trace.append(loss_dict(l));
            return py::make_tuple(std::move(run.model), trace);
        },
        py::arg("data"), py::arg("config"), py::arg("on_epoch") = nullptr,
        "Train from scratch; returns (model, per-epoch loss trace).");

    m.def(
        "ks_test_exponential",
        [](std::vector<double> samples, double rate) {
            auto r = ks_test_exponential(std::move(samples), rate);
            return py::make_tuple(r.statistic, r.p_value);
        },
        py::arg("samples"), py::arg("rate"));

    m.def(
        "run_cli",
        [](std::vector<std::string> args) {
            args.insert(args.begin(), "nextpp");
            std::ostringstream out, err;
            const int code = run_cli(args, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Run a command-line subcommand in-process; returns (exit code, stdout, stderr).");
}
