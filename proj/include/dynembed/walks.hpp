#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dynembed/temporal_graph.hpp"

namespace dynembed {

// Walk corpus for one snapshot: r walks of length L from every node of V_t,
// stored flat in canonical order (root ascending, then walk index).
struct WalkSet {
    int timestep = 0;
    std::size_t walk_length = 0;   // L
    std::size_t walks_per_node = 0; // r
    std::vector<NodeId> roots;      // ascending
    std::vector<NodeId> data;       // roots.size() * r walks, walk_length each
    std::uint64_t rng_seed = 0;

    std::size_t num_walks() const { return roots.size() * walks_per_node; }
    std::span<const NodeId> walk(std::size_t i) const {
        return {data.data() + i * walk_length, walk_length};
    }
};

// Uniform random walks over every snapshot. Each root draws from its own
// derived sub-seed, so parallel and sequential runs emit identical bytes.
// workers = 0 picks the hardware thread count.
std::vector<WalkSet> random_walks(const DynamicNetwork& network, std::size_t walks_per_node,
                                  std::size_t walk_length, std::uint64_t seed,
                                  unsigned workers = 0);

// One text file per timestep, one walk per line, space-separated dense ids.
void dump_walks(const std::vector<WalkSet>& corpus, const std::string& dir);

} // namespace dynembed
