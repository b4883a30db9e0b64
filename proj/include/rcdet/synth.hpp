#pragma once

// Synthetic bug-fix corpus with a planted, learnable root-cause signal:
// root-cause deleted lines read a `legacyMask` identifier no other line
// uses, and define a local that several later deleted lines read.

#include "rcdet/ingest.hpp"

#include <cstdint>
#include <vector>

namespace rcdet {

struct SynthConfig {
    int commits = 200;
    int projects = 4;
    std::uint64_t seed = 7;
};

inline constexpr const char* kSynthMarker = "legacyMask";

std::vector<CommitRecord> synth_corpus(const SynthConfig& config);

} // namespace rcdet
