#include "mwlil/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "mwlil/conditions.hpp"
#include "mwlil/transfer_op.hpp"

namespace mwlil {

std::string chain_to_string(const ChainSpec& chain) {
    if (chain.kind == ChainKind::Bernoulli) return "bernoulli";
    return "lebesgue(" + std::to_string(chain.memory) + ")";
}

ChainSpec parse_chain(std::string_view text) {
    if (text == "bernoulli") return ChainSpec::bernoulli();
    if (text == "lebesgue") return ChainSpec::lebesgue();
    if (text.starts_with("lebesgue(") && text.ends_with(")")) {
        const std::string_view inner = text.substr(9, text.size() - 10);
        int K = -1;
        const auto res = std::from_chars(inner.data(), inner.data() + inner.size(), K);
        if (res.ec != std::errc{} || res.ptr != inner.data() + inner.size() || K < 0)
            throw ConfigError("bad lebesgue memory in '" + std::string(text) + "'");
        return ChainSpec::lebesgue(K);
    }
    throw ConfigError("unknown chain '" + std::string(text) + "'");
}

nlohmann::ordered_json to_json(const ExperimentConfig& c) {
    nlohmann::ordered_json j;
    j["command"] = c.command;
    j["experiment_id"] = c.experiment_id;
    j["chain"] = chain_to_string(c.chain);
    j["functional"] = to_string(c.functional);
    j["n"] = c.n;
    j["paths"] = c.paths;
    j["seed"] = c.seed;
    j["eps_grid"] = c.eps_grid;
    j["checkpoints"] = c.checkpoints;
    j["n0"] = c.n0;
    j["conditions"] = c.conditions;
    j["delta"] = c.delta;
    j["max_terms"] = c.max_terms;
    j["max_samples"] = c.max_samples;
    j["output_dir"] = c.output_dir;
    j["threads"] = c.threads;
    return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    static const std::set<std::string> known{
        "command", "experiment_id", "chain",     "functional", "n",           "paths",
        "seed",    "eps_grid",      "checkpoints", "n0",       "conditions",  "delta",
        "max_terms", "max_samples", "output_dir", "threads"};
    for (const auto& [key, value] : j.items())
        if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");

    ExperimentConfig c;
    try {
        if (j.contains("command")) c.command = j.at("command").get<std::string>();
        if (j.contains("experiment_id")) c.experiment_id = j.at("experiment_id").get<std::string>();
        if (j.contains("chain")) c.chain = parse_chain(j.at("chain").get<std::string>());
        if (j.contains("functional"))
            c.functional = parse_functional_spec(j.at("functional").get<std::string>());
        if (j.contains("n")) c.n = j.at("n").get<std::int64_t>();
        if (j.contains("paths")) c.paths = j.at("paths").get<std::int64_t>();
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("eps_grid")) c.eps_grid = j.at("eps_grid").get<std::vector<double>>();
        if (j.contains("checkpoints"))
            c.checkpoints = j.at("checkpoints").get<std::vector<std::int64_t>>();
        if (j.contains("n0")) c.n0 = j.at("n0").get<std::int64_t>();
        if (j.contains("conditions")) c.conditions = j.at("conditions").get<std::vector<std::string>>();
        if (j.contains("delta")) c.delta = j.at("delta").get<double>();
        if (j.contains("max_terms")) c.max_terms = j.at("max_terms").get<std::int64_t>();
        if (j.contains("max_samples")) c.max_samples = j.at("max_samples").get<std::int64_t>();
        if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
        if (j.contains("threads")) c.threads = j.at("threads").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return c;
}

void validate(const ExperimentConfig& c) {
    static const std::set<std::string> commands{"simulate", "decompose", "lil", "conditions", "norms"};
    if (!commands.count(c.command)) throw ConfigError("unknown command '" + c.command + "'");
    if (c.experiment_id.empty() || c.experiment_id.find_first_of(",\"\n") != std::string::npos)
        throw ConfigError("experiment_id must be non-empty and free of commas and quotes");
    if (c.n < 1) throw ConfigError("n must be >= 1");
    if (c.paths < 1) throw ConfigError("paths must be >= 1");
    if (c.n0 < 3) throw ConfigError("n0 must be >= 3");
    if (c.threads < 0) throw ConfigError("threads must be >= 0");
    if (!(c.delta >= 0.0) || !std::isfinite(c.delta)) throw ConfigError("delta must be >= 0");
    if (c.max_terms < 4) throw ConfigError("max_terms must be >= 4");
    if (c.max_samples < 100) throw ConfigError("max_samples must be >= 100");
    for (std::size_t i = 0; i < c.eps_grid.size(); ++i) {
        if (!(c.eps_grid[i] > 0.0)) throw ConfigError("eps_grid entries must be positive");
        if (i > 0 && !(c.eps_grid[i] < c.eps_grid[i - 1]))
            throw ConfigError("eps_grid must be strictly decreasing");
    }
    for (std::size_t i = 0; i < c.checkpoints.size(); ++i) {
        if (c.checkpoints[i] < 1 || c.checkpoints[i] > c.n)
            throw ConfigError("checkpoints must lie in [1, n]");
        if (i > 0 && c.checkpoints[i] <= c.checkpoints[i - 1])
            throw ConfigError("checkpoints must be increasing");
    }
    for (const auto& name : c.conditions) {
        try {
            parse_condition_id(name);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    try {
        make_functional(c.functional, c.chain);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

std::vector<double> effective_eps_grid(const ExperimentConfig& c) {
    return c.eps_grid.empty() ? dyadic_eps_grid(1, 12) : c.eps_grid;
}

}  // namespace mwlil
