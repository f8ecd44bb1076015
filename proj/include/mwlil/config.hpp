#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "mwlil/catalog.hpp"
#include "mwlil/chain.hpp"

namespace mwlil {

/// Everything a run depends on.  Serialises to JSON; unknown keys are
/// rejected on input.
struct ExperimentConfig {
    std::string command = "simulate";
    std::string experiment_id = "run";
    ChainSpec chain = ChainSpec::bernoulli();
    FunctionalSpec functional;
    std::int64_t n = 1 << 16;
    std::int64_t paths = 100;
    std::uint64_t seed = 42;
    std::vector<double> eps_grid;             // empty: 2^-1 .. 2^-12
    std::vector<std::int64_t> checkpoints;    // empty: 2^8, 2^10, ... up to n
    std::int64_t n0 = 1000;
    std::vector<std::string> conditions{"MW102", "Cor211", "Cor212"};
    double delta = 0.5;
    std::int64_t max_terms = std::int64_t{1} << 18;
    std::int64_t max_samples = std::int64_t{1} << 20;
    std::string output_dir = ".";
    int threads = 0;

    bool operator==(const ExperimentConfig&) const = default;
};

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

std::string chain_to_string(const ChainSpec& chain);
ChainSpec parse_chain(std::string_view text);

nlohmann::ordered_json to_json(const ExperimentConfig& c);
ExperimentConfig config_from_json(const nlohmann::json& j);

/// Throws ConfigError when values are out of range or inconsistent.
void validate(const ExperimentConfig& c);

/// The eps grid after defaults are applied.
std::vector<double> effective_eps_grid(const ExperimentConfig& c);

}  // namespace mwlil
