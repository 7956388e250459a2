#pragma once

// Flat key = value run configuration. Every key has a default; files and
// command-line overrides may only set known keys.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nextpp/baselines.hpp"
#include "nextpp/sampling.hpp"
#include "nextpp/training.hpp"

namespace nextpp {

class RunConfig {
public:
    RunConfig();

    // Parses "key = value" lines; '#' starts a comment. Throws ParseError on
    // malformed lines and ValidationError on unknown keys.
    static RunConfig from_text(const std::string& text);
    static RunConfig from_file(const std::filesystem::path& path);

    bool has(const std::string& key) const;
    void set(const std::string& key, const std::string& value);
    // "key=value"
    void set_assignment(const std::string& assignment);
    const std::string& get(const std::string& key) const;

    std::string text() const;  // every key, sorted
    void write(const std::filesystem::path& path) const;

    std::string str(const std::string& key) const { return get(key); }
    double real(const std::string& key) const;
    std::size_t count(const std::string& key) const;
    std::uint64_t u64(const std::string& key) const;
    bool flag(const std::string& key) const;
    std::vector<double> reals(const std::string& key) const;  // "a,b,c"
    std::vector<std::vector<double>> matrix(const std::string& key) const;  // "a,b;c,d"

    // Typed views; mark_count comes from the data.
    TrainConfig train_config(std::size_t mark_count) const;
    ModelConfig model_config(std::size_t mark_count) const;
    // horizon = auto falls back to `fallback_horizon`.
    ThinningConfig thinning_config(double fallback_horizon) const;
    PoissonParams poisson_params() const;
    HawkesParams hawkes_params() const;

    static const std::map<std::string, std::string>& defaults();

private:
    std::map<std::string, std::string> values_;
};

}  // namespace nextpp
