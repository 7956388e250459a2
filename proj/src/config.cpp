#include "nextpp/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "nextpp/errors.hpp"

namespace nextpp {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(trim(cur));
    return out;
}

double parse_real(const std::string& key, const std::string& v) {
    double x = 0.0;
    const auto* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, x);
    if (ec != std::errc() || p != end) throw ValidationError("config " + key + ": '" + v + "' is not a number");
    return x;
}

}  // namespace

const std::map<std::string, std::string>& RunConfig::defaults() {
    static const std::map<std::string, std::string> d = {
        // training
        {"seed", "1"},
        {"epochs", "10"},
        {"lr", "0.001"},
        {"batch_size", "16"},
        {"mc_samples", "20"},
        {"integrator", "monte_carlo"},
        {"eval_points", "20"},
        // model
        {"model_dim", "16"},
        {"latent_dim", "8"},
        {"heads", "2"},
        {"layers", "2"},
        {"dropout", "0.1"},
        {"ode_steps", "8"},
        {"alpha", "1"},
        {"disable_neural_evolution", "false"},
        {"disable_cross_attention", "false"},
        // thinning / prediction
        {"horizon", "auto"},
        {"bound_margin", "auto"},
        {"bound_grid_points", "64"},
        {"max_rejections", "100000"},
        {"count", "10"},
        // synthetic generators
        {"kind", "hawkes"},
        {"rates", "0.2,0.2"},
        {"base", "0.2,0.2"},
        {"excitation", "0.6,0.1;0.1,0.6"},
        {"decay", "1"},
        {"T", "100"},
        {"n_train", "400"},
        {"n_dev", "50"},
        {"n_test", "100"},
        // paths and sources
        {"data", ""},
        {"dev", ""},
        {"checkpoint", ""},
        {"oracle", ""},
        {"prefix", ""},
        {"out", "."},
    };
    return d;
}

RunConfig::RunConfig() : values_(defaults()) {}

RunConfig RunConfig::from_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ParseError("config line " + std::to_string(lineno) + ": empty key");
        cfg.set(key, trim(line.substr(eq + 1)));
    }
    return cfg;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_text(ss.str());
}

bool RunConfig::has(const std::string& key) const { return values_.count(key) > 0; }

void RunConfig::set(const std::string& key, const std::string& value) {
    auto it = values_.find(key);
    if (it == values_.end()) throw ValidationError("unknown config key '" + key + "'");
    it->second = value;
}

void RunConfig::set_assignment(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value, got '" + assignment + "'");
    set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

const std::string& RunConfig::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ValidationError("unknown config key '" + key + "'");
    return it->second;
}

std::string RunConfig::text() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
    return out;
}

void RunConfig::write(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << text();
}

double RunConfig::real(const std::string& key) const { return parse_real(key, get(key)); }

std::size_t RunConfig::count(const std::string& key) const { return static_cast<std::size_t>(u64(key)); }

std::uint64_t RunConfig::u64(const std::string& key) const {
    const std::string& v = get(key);
    std::uint64_t x = 0;
    const auto* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, x);
    if (ec != std::errc() || p != end) {
        throw ValidationError("config " + key + ": '" + v + "' is not a nonnegative integer");
    }
    return x;
}

bool RunConfig::flag(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ValidationError("config " + key + ": '" + v + "' is not a boolean");
}

std::vector<double> RunConfig::reals(const std::string& key) const {
    std::vector<double> out;
    for (const auto& part : split(get(key), ',')) out.push_back(parse_real(key, part));
    return out;
}

std::vector<std::vector<double>> RunConfig::matrix(const std::string& key) const {
    std::vector<std::vector<double>> out;
    for (const auto& row : split(get(key), ';')) {
        std::vector<double> r;
        for (const auto& part : split(row, ',')) r.push_back(parse_real(key, part));
        out.push_back(std::move(r));
    }
    return out;
}

ModelConfig RunConfig::model_config(std::size_t mark_count) const {
    ModelConfig m;
    m.mark_count = mark_count;
    m.model_dim = count("model_dim");
    m.latent_dim = count("latent_dim");
    m.heads = count("heads");
    m.layers = count("layers");
    m.dropout = real("dropout");
    m.ode_steps = count("ode_steps");
    m.block_ratio = real("alpha");
    m.disable_neural_evolution = flag("disable_neural_evolution");
    m.disable_cross_attention = flag("disable_cross_attention");
    try {
        m.validate();
    } catch (const ContractError& e) {
        throw ValidationError(e.what());
    }
    return m;
}

TrainConfig RunConfig::train_config(std::size_t mark_count) const {
    TrainConfig t;
    t.model = model_config(mark_count);
    t.learning_rate = real("lr");
    t.epochs = count("epochs");
    t.batch_size = count("batch_size");
    t.mc_samples = count("mc_samples");
    t.seed = u64("seed");
    try {
        t.integrator = integrator_from_string(get("integrator"));
        t.validate();
    } catch (const ContractError& e) {
        throw ValidationError(e.what());
    }
    return t;
}

ThinningConfig RunConfig::thinning_config(double fallback_horizon) const {
    ThinningConfig c;
    c.horizon = get("horizon") == "auto" ? fallback_horizon : real("horizon");
    if (get("bound_margin") != "auto") c.bound_margin = real("bound_margin");
    c.bound_grid_points = count("bound_grid_points");
    c.max_rejections = count("max_rejections");
    try {
        c.validate();
    } catch (const ContractError& e) {
        throw ValidationError(e.what());
    }
    return c;
}

PoissonParams RunConfig::poisson_params() const {
    PoissonParams p{reals("rates")};
    try {
        p.validate();
    } catch (const ContractError& e) {
        throw ValidationError(e.what());
    }
    return p;
}

HawkesParams RunConfig::hawkes_params() const {
    HawkesParams p{reals("base"), matrix("excitation"), real("decay")};
    try {
        p.validate();
    } catch (const ContractError& e) {
        throw ValidationError(e.what());
    }
    return p;
}

}  // namespace nextpp
