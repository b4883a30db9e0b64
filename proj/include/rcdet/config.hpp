#pragma once

// Run configuration: a key=value file, '#' comments. Unknown keys are
// rejected so that typos in sweep files fail loudly.

#include "rcdet/embed.hpp"
#include "rcdet/rank.hpp"
#include "rcdet/rgcn.hpp"

#include <cstdint>
#include <memory>
#include <string>

namespace rcdet {

struct RunConfig {
    ModelConfig model;   // model.input_dim doubles as the embedding dim
    TrainConfig train;   // train.seed is derived from `seed`
    LossConfig loss;
    int k = 10;
    std::uint64_t seed = 0;
    std::string embedder = "hashed";    // hashed | file:<path>
    std::string embedder_fallback = "none"; // none | hashed
    bool fill_missing = false;
    std::string method = "rc-detection";
    int jobs = 1; // not part of the file format; set from the command line

    void validate() const;
};

RunConfig parse_config(const std::string& text, RunConfig base = {});
RunConfig load_config(const std::string& path, RunConfig base = {});

/// Every key with its resolved value, one per line, in a fixed order.
std::string echo_config(const RunConfig& config);

std::shared_ptr<const Embedder> make_embedder(const RunConfig& config);

/// A reloadable description of the embedder, stored in checkpoints.
std::string embedder_spec(const RunConfig& config);

/// Applies a spec written by embedder_spec back onto `config`.
void apply_embedder_spec(RunConfig& config, const std::string& spec);

} // namespace rcdet
