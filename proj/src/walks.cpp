#include "dynembed/walks.hpp"

#include <filesystem>
#include <fstream>
#include <thread>

#include "dynembed/errors.hpp"
#include "dynembed/rng.hpp"

namespace fs = std::filesystem;

namespace dynembed {

namespace {

unsigned resolve_workers(unsigned workers) {
    if (workers > 0) return workers;
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

// Walks for one root; transition probability is uniform over distinct
// neighbors, edge weights do not bias the walk.
void walk_from_root(const Snapshot& snap, NodeId root, std::size_t r, std::size_t L,
                    std::uint64_t sub_seed, NodeId* out) {
    auto eng = rng::engine(sub_seed);
    for (std::size_t k = 0; k < r; ++k) {
        NodeId cur = root;
        NodeId* w = out + k * L;
        w[0] = cur;
        for (std::size_t step = 1; step < L; ++step) {
            const auto& nbrs = snap.adjacency[cur];
            // Unreachable for snapshot-derived roots (V_t nodes all have
            // degree >= 1 and the graph is undirected); guards hand-built
            // graphs in tests.
            if (nbrs.empty()) {
                w[step] = cur;
                continue;
            }
            std::uniform_int_distribution<std::size_t> pick(0, nbrs.size() - 1);
            cur = nbrs[pick(eng)].first;
            w[step] = cur;
        }
    }
}

} // namespace

std::vector<WalkSet> random_walks(const DynamicNetwork& network, std::size_t walks_per_node,
                                  std::size_t walk_length, std::uint64_t seed,
                                  unsigned workers) {
    if (walks_per_node < 1) throw DataError("walks per node must be >= 1");
    if (walk_length < 2) throw DataError("walk length must be >= 2");
    const unsigned nworkers = resolve_workers(workers);

    std::vector<WalkSet> corpus;
    corpus.reserve(network.timestep_count());
    for (const auto& snap : network.snapshots) {
        WalkSet ws;
        ws.timestep = snap.index;
        ws.walk_length = walk_length;
        ws.walks_per_node = walks_per_node;
        ws.rng_seed = seed;
        for (NodeId v : snap.nodes)
            if (snap.degree(v) >= 1) ws.roots.push_back(v);
        ws.data.resize(ws.roots.size() * walks_per_node * walk_length);

        auto run_range = [&](std::size_t lo, std::size_t hi) {
            for (std::size_t i = lo; i < hi; ++i) {
                const NodeId root = ws.roots[i];
                walk_from_root(snap, root, walks_per_node, walk_length,
                               rng::derive(seed, "walk", std::uint64_t(snap.index), root),
                               ws.data.data() + i * walks_per_node * walk_length);
            }
        };

        if (nworkers <= 1 || ws.roots.size() < 2 * nworkers) {
            run_range(0, ws.roots.size());
        } else {
            std::vector<std::thread> pool;
            const std::size_t chunk = (ws.roots.size() + nworkers - 1) / nworkers;
            for (unsigned w = 0; w < nworkers; ++w) {
                const std::size_t lo = w * chunk;
                const std::size_t hi = std::min(lo + chunk, ws.roots.size());
                if (lo < hi) pool.emplace_back(run_range, lo, hi);
            }
            for (auto& th : pool) th.join();
        }
        corpus.push_back(std::move(ws));
    }
    return corpus;
}

void dump_walks(const std::vector<WalkSet>& corpus, const std::string& dir) {
    fs::create_directories(dir);
    for (const auto& ws : corpus) {
        char name[32];
        std::snprintf(name, sizeof name, "walks_%03d.txt", ws.timestep);
        std::ofstream out(fs::path(dir) / name);
        for (std::size_t i = 0; i < ws.num_walks(); ++i) {
            auto w = ws.walk(i);
            for (std::size_t j = 0; j < w.size(); ++j)
                out << (j ? " " : "") << w[j];
            out << '\n';
        }
    }
}

} // namespace dynembed
