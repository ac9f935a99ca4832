#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dynembed/temporal_graph.hpp"

namespace dynembed {

struct SynthConfig {
    std::size_t n = 500;             // node count
    double alpha_pl = 2.0;           // power-law exponent
    double c = 100.0;                // power-law scale: degree cap C^(1/alpha)
    std::size_t communities = 4;
    double evolving_fraction = 0.10;
    std::size_t timesteps = 10;
    double intra_ratio = 0.8;        // fraction of stubs wired inside the community
    double stable_rewire_prob = 0.3; // chance a stable node rewires one edge per step
    std::uint64_t seed = 1;

    void validate() const; // throws DataError
};

// Per evolving node: where it starts, where it migrates, and how many
// incident edge changes it made at each timestep (index 0 is always 0).
struct MigrationRecord {
    NodeId node = 0;
    std::size_t source = 0;
    std::size_t target = 0;
    std::vector<std::size_t> rewired;
};

struct SynthNetwork {
    DynamicNetwork network;
    std::vector<NodeId> evolving_nodes;                 // ascending
    std::vector<std::vector<std::size_t>> community_of; // [timestep][node]
    std::vector<MigrationRecord> migration_schedule;
    std::size_t regenerations = 0;
};

// P(deg = k) proportional to k^(-alpha) for k in [1, k_max] with
// k_max = min(N-1, ceil(C^(1/alpha))); the sum is evened by incrementing
// one sampled node.
std::vector<std::size_t> sample_degrees(const SynthConfig& config, std::mt19937_64& eng);

// Timestep 1 wires the sampled degrees configuration-model style with
// intra_ratio of stubs inside each node's community. Every later timestep
// rewires: stable nodes change at most 2 incident edges, evolving nodes
// change 3 to 5 while keeping additions within one of deletions, and each
// evolving node migrates into its target community (at least 80% of its
// edges there by the final timestep, intra-source count non-increasing and
// intra-target non-decreasing throughout).
SynthNetwork generate(const SynthConfig& config);

// Snapshot edge lists plus ground_truth.txt
// ("node_id is_evolving community_t1 ... community_tT") and the config
// manifest synth_config.json.
void dump_synth(const SynthNetwork& synth, const SynthConfig& config, const std::string& dir);

struct GroundTruth {
    std::vector<std::uint64_t> evolving;            // original labels, ascending
    std::vector<std::vector<std::size_t>> community; // [node][timestep]
    std::vector<std::uint64_t> labels;               // row order of the file
};

GroundTruth load_ground_truth(const std::string& path);

} // namespace dynembed
