#include "nextpp/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nextpp/errors.hpp"

namespace nextpp {

using json = nlohmann::json;

namespace {

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

json config_json(const ModelConfig& c) {
    return {{"mark_count", c.mark_count},
            {"model_dim", c.model_dim},
            {"latent_dim", c.latent_dim},
            {"heads", c.heads},
            {"layers", c.layers},
            {"dropout", c.dropout},
            {"ode_steps", c.ode_steps},
            {"block_ratio", c.block_ratio},
            {"disable_neural_evolution", c.disable_neural_evolution},
            {"disable_cross_attention", c.disable_cross_attention}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    c.mark_count = j.at("mark_count").get<std::size_t>();
    c.model_dim = j.at("model_dim").get<std::size_t>();
    c.latent_dim = j.at("latent_dim").get<std::size_t>();
    c.heads = j.at("heads").get<std::size_t>();
    c.layers = j.at("layers").get<std::size_t>();
    c.dropout = j.at("dropout").get<double>();
    c.ode_steps = j.at("ode_steps").get<std::size_t>();
    c.block_ratio = j.at("block_ratio").get<double>();
    c.disable_neural_evolution = j.at("disable_neural_evolution").get<bool>();
    c.disable_cross_attention = j.at("disable_cross_attention").get<bool>();
    return c;
}

}  // namespace

std::string checkpoint_to_string(const Model& model) {
    json params = json::array();
    const ParamStore& ps = model.params();
    for (std::size_t i = 0; i < ps.size(); ++i) {
        const Tensor& t = ps.get(i);
        params.push_back({{"name", ps.name(i)},
                          {"shape", t.shape()},
                          {"data", std::vector<double>(t.data().begin(), t.data().end())}});
    }
    json j = {{"format", "nextpp-checkpoint"},
              {"format_version", kCheckpointFormatVersion},
              {"config_hash", hex64(model.config().shape_hash())},
              {"config", config_json(model.config())},
              {"params", params}};
    return j.dump() + "\n";
}

Model checkpoint_from_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("checkpoint is not valid JSON: ") + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != "nextpp-checkpoint") {
            throw ParseError("not a nextpp checkpoint");
        }
        const int version = j.at("format_version").get<int>();
        if (version != kCheckpointFormatVersion) {
            throw IncompatibleError("checkpoint format version " + std::to_string(version) +
                                    " is not supported (expected " +
                                    std::to_string(kCheckpointFormatVersion) + ")");
        }
        ModelConfig cfg = config_from_json(j.at("config"));
        if (j.at("config_hash").get<std::string>() != hex64(cfg.shape_hash())) {
            throw IncompatibleError("checkpoint config hash does not match its config");
        }
        ParamStore store;
        for (const auto& p : j.at("params")) {
            Shape shape = p.at("shape").get<Shape>();
            std::vector<double> data = p.at("data").get<std::vector<double>>();
            store.add(p.at("name").get<std::string>(), Tensor(std::move(shape), std::move(data)));
        }
        return Model::from_params(cfg, std::move(store));
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed checkpoint: ") + e.what());
    } catch (const DimensionError& e) {
        throw ParseError(std::string("malformed checkpoint: ") + e.what());
    }
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
    const std::string text = checkpoint_to_string(model);
    // Write-then-rename so a crash never leaves a half-written checkpoint.
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << text;
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move checkpoint into place: " + ec.message());
}

Model load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return checkpoint_from_string(buf.str());
}

Model load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected) {
    Model m = load_checkpoint(path);
    if (m.config().shape_hash() != expected.shape_hash()) {
        throw IncompatibleError("checkpoint dimensions (config hash " +
                                hex64(m.config().shape_hash()) +
                                ") do not match the requested configuration (" +
                                hex64(expected.shape_hash()) + ")");
    }
    return m;
}

}  // namespace nextpp
