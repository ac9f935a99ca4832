#include "dynembed/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <unordered_set>

#include "dynembed/errors.hpp"
#include "dynembed/rng.hpp"

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace dynembed {

void SynthConfig::validate() const {
    if (n < 2) throw DataError("synthetic network needs at least 2 nodes");
    if (communities < 2 || n < communities)
        throw DataError("need at least 2 communities and n >= communities");
    if (!(alpha_pl > 1.0)) throw DataError("power-law exponent must exceed 1");
    if (!(c > 0.0)) throw DataError("power-law scale must be positive");
    if (!(evolving_fraction > 0.0) || !(evolving_fraction < 1.0))
        throw DataError("evolving fraction must lie in (0, 1)");
    if (timesteps == 0) throw DataError("need at least 1 timestep");
    if (!(intra_ratio > 0.5) || intra_ratio > 1.0)
        throw DataError("intra ratio must lie in (0.5, 1]");
    if (stable_rewire_prob < 0.0 || stable_rewire_prob > 1.0)
        throw DataError("rewire probability must lie in [0, 1]");
}

std::vector<std::size_t> sample_degrees(const SynthConfig& config, std::mt19937_64& eng) {
    const std::size_t cap = std::size_t(std::ceil(std::pow(config.c, 1.0 / config.alpha_pl)));
    const std::size_t k_max = std::max<std::size_t>(1, std::min(config.n - 1, cap));

    std::vector<double> weights(k_max);
    for (std::size_t k = 1; k <= k_max; ++k)
        weights[k - 1] = std::pow(double(k), -config.alpha_pl);
    std::discrete_distribution<std::size_t> dist(weights.begin(), weights.end());

    std::vector<std::size_t> degrees(config.n);
    std::size_t sum = 0;
    for (auto& d : degrees) {
        d = dist(eng) + 1;
        sum += d;
    }
    if (sum % 2 != 0) {
        std::uniform_int_distribution<std::size_t> pick(0, config.n - 1);
        for (;;) {
            std::size_t i = pick(eng);
            if (degrees[i] + 1 <= config.n - 1) {
                ++degrees[i];
                break;
            }
        }
    }
    return degrees;
}

namespace {

std::uint64_t ekey(NodeId u, NodeId v) {
    if (u > v) std::swap(u, v);
    return (std::uint64_t(u) << 32) | v;
}

// Mutable undirected simple graph with sorted adjacency.
struct MutableGraph {
    std::vector<std::vector<NodeId>> adj;
    std::unordered_set<std::uint64_t> edges;

    explicit MutableGraph(std::size_t n) : adj(n) {}

    bool has(NodeId u, NodeId v) const { return edges.count(ekey(u, v)) != 0; }
    std::size_t deg(NodeId v) const { return adj[v].size(); }

    void add(NodeId u, NodeId v) {
        edges.insert(ekey(u, v));
        adj[u].insert(std::lower_bound(adj[u].begin(), adj[u].end(), v), v);
        adj[v].insert(std::lower_bound(adj[v].begin(), adj[v].end(), u), u);
    }
    void remove(NodeId u, NodeId v) {
        edges.erase(ekey(u, v));
        adj[u].erase(std::lower_bound(adj[u].begin(), adj[u].end(), v));
        adj[v].erase(std::lower_bound(adj[v].begin(), adj[v].end(), u));
    }
};

// Pairs stubs into edges, re-drawing the partner stub up to a bounded number
// of tries on self-loops, duplicates, or (for the cross pool) same-community
// pairs; irreparable stubs are discarded.
void pair_stubs(std::vector<NodeId>& pool, MutableGraph& g, std::mt19937_64& eng,
                bool want_cross, const std::vector<std::size_t>& comm) {
    std::shuffle(pool.begin(), pool.end(), eng);
    for (std::size_t i = 0; i + 1 < pool.size(); i += 2) {
        for (int tries = 0; tries <= 20; ++tries) {
            NodeId u = pool[i], v = pool[i + 1];
            bool ok = u != v && !g.has(u, v);
            if (ok && want_cross && tries < 15 && comm[u] == comm[v]) ok = false;
            if (ok) {
                g.add(u, v);
                break;
            }
            if (i + 2 >= pool.size()) break;
            std::uniform_int_distribution<std::size_t> pick(i + 2, pool.size() - 1);
            std::swap(pool[i + 1], pool[pick(eng)]);
        }
    }
}

Snapshot snapshot_from(const MutableGraph& g, int index) {
    Snapshot snap;
    snap.index = index;
    snap.span_begin = index;
    snap.span_end = index + 1;
    snap.raw_edge_count = g.edges.size();
    snap.adjacency.resize(g.adj.size());
    for (NodeId v = 0; v < g.adj.size(); ++v) {
        snap.adjacency[v].reserve(g.adj[v].size());
        for (NodeId u : g.adj[v]) snap.adjacency[v].emplace_back(u, 1.0);
        if (!g.adj[v].empty()) snap.nodes.push_back(v);
    }
    return snap;
}

template <typename T>
const T* pick_uniform(const std::vector<T>& candidates, std::mt19937_64& eng) {
    if (candidates.empty()) return nullptr;
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    return &candidates[pick(eng)];
}

} // namespace

namespace {

// One full generation pass. Returns nullopt when some evolving node could not
// reach 3 edge changes in a timestep (its neighborhood saturated); the caller
// retries with a derived sub-seed.
std::optional<SynthNetwork> generate_attempt(const SynthConfig& config, std::uint64_t seed) {
    const std::size_t n = config.n;
    const std::size_t T = config.timesteps;
    const std::size_t K = config.communities;

    auto deg_eng = rng::engine(rng::derive(seed, "degrees"));
    const auto degrees = sample_degrees(config, deg_eng);

    std::vector<std::size_t> comm(n);
    {
        auto eng = rng::engine(rng::derive(seed, "communities"));
        std::vector<NodeId> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), eng);
        for (std::size_t j = 0; j < n; ++j) comm[order[j]] = j % K;
    }

    std::vector<std::uint8_t> is_evolving(n, 0);
    std::vector<std::size_t> target(n, 0);
    std::vector<NodeId> evolving;
    {
        auto eng = rng::engine(rng::derive(seed, "evolving"));
        std::vector<NodeId> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), eng);
        const std::size_t count = std::size_t(std::llround(double(n) * config.evolving_fraction));
        evolving.assign(order.begin(), order.begin() + count);
        std::sort(evolving.begin(), evolving.end());
        std::uniform_int_distribution<std::size_t> other(0, K - 2);
        for (NodeId e : evolving) {
            is_evolving[e] = 1;
            std::size_t pick = other(eng);
            target[e] = pick >= comm[e] ? pick + 1 : pick;
        }
    }

    MutableGraph g(n);
    {
        auto eng = rng::engine(rng::derive(seed, "wiring"));
        std::vector<std::vector<NodeId>> intra_pool(K);
        std::vector<NodeId> inter_pool;
        for (NodeId v = 0; v < n; ++v) {
            std::binomial_distribution<std::size_t> split(degrees[v], config.intra_ratio);
            const std::size_t bi = split(eng);
            for (std::size_t s = 0; s < bi; ++s) intra_pool[comm[v]].push_back(v);
            for (std::size_t s = bi; s < degrees[v]; ++s) inter_pool.push_back(v);
        }
        for (std::size_t c = 0; c < K; ++c) {
            if (intra_pool[c].size() % 2 != 0) {
                inter_pool.push_back(intra_pool[c].back());
                intra_pool[c].pop_back();
            }
            pair_stubs(intra_pool[c], g, eng, false, comm);
        }
        pair_stubs(inter_pool, g, eng, true, comm);

        // Discarded stubs can leave a node bare; every node keeps at least one
        // edge so V_t stays the full vocabulary.
        for (NodeId v = 0; v < n; ++v) {
            if (g.deg(v) > 0) continue;
            std::vector<NodeId> candidates;
            for (NodeId w = 0; w < n; ++w)
                if (w != v && comm[w] == comm[v] && !g.has(v, w)) candidates.push_back(w);
            if (candidates.empty())
                for (NodeId w = 0; w < n; ++w)
                    if (w != v && !g.has(v, w)) candidates.push_back(w);
            if (const NodeId* w = pick_uniform(candidates, eng)) g.add(v, *w);
        }
    }

    // A degree-1/2 evolving node must shed one of its few edges every
    // timestep, yet some picks cannot: a neighbor absorbing deletions from
    // three such nodes trips its own churn cap, and an edge whose evolving
    // endpoint counts it toward its migration target can never be removed
    // from this side. Re-seat those picks onto well-connected stables before
    // the first transition, or it has no legal move at all.
    {
        auto eng = rng::engine(rng::derive(seed, "rebalance"));
        std::vector<int> load(n, 0);
        auto fragile = [&](NodeId v) { return is_evolving[v] && g.deg(v) <= 2; };
        for (NodeId e = 0; e < n; ++e)
            if (fragile(e))
                for (NodeId nb : g.adj[e]) load[nb] += 1;
        auto swap_out = [&](NodeId e) {
            std::vector<NodeId> cands;
            for (NodeId r = 0; r < n; ++r)
                if (!is_evolving[r] && comm[r] == comm[e] && g.deg(r) >= 3 &&
                    load[r] == 0)
                    cands.push_back(r);
            if (cands.empty())
                for (NodeId r = 0; r < n; ++r)
                    if (!is_evolving[r] && g.deg(r) >= 3 && load[r] == 0)
                        cands.push_back(r);
            const NodeId* rpick = pick_uniform(cands, eng);
            if (!rpick) return false;
            const NodeId r = *rpick;
            is_evolving[e] = 0;
            for (NodeId nb : g.adj[e]) load[nb] -= 1;
            is_evolving[r] = 1;
            if (target[e] != comm[r]) {
                target[r] = target[e];
            } else {
                std::uniform_int_distribution<std::size_t> other(0, K - 2);
                const std::size_t pick = other(eng);
                target[r] = pick >= comm[r] ? pick + 1 : pick;
            }
            return true;
        };
        for (NodeId e = 0; e < n; ++e) {
            if (!fragile(e)) continue;
            bool sticky = false;
            for (NodeId nb : g.adj[e])
                if (is_evolving[nb] && comm[e] == target[nb]) sticky = true;
            if (sticky) swap_out(e);
        }
        // a neighbor of degree 1 or 2 serves one dependent before it is either
        // orphan-exposed or churn-capped; only deg>=3 neighbors can take two
        for (NodeId s = 0; s < n; ++s) {
            const int cap = g.deg(s) >= 3 ? 2 : 1;
            while (!is_evolving[s] && load[s] > cap) {
                std::vector<NodeId> deps;
                for (NodeId e : g.adj[s])
                    if (fragile(e)) deps.push_back(e);
                const NodeId* epick = pick_uniform(deps, eng);
                if (!epick || !swap_out(*epick)) break;
            }
        }
        evolving.clear();
        for (NodeId v = 0; v < n; ++v)
            if (is_evolving[v]) evolving.push_back(v);
    }

    std::vector<std::vector<NodeId>> stable_members(K);
    for (NodeId v = 0; v < n; ++v)
        if (!is_evolving[v]) stable_members[comm[v]].push_back(v);

    SynthNetwork out;
    out.evolving_nodes = evolving;
    out.community_of.assign(T, comm);
    out.migration_schedule.reserve(evolving.size());
    std::vector<std::size_t> schedule_index(n, 0);
    for (std::size_t i = 0; i < evolving.size(); ++i) {
        schedule_index[evolving[i]] = i;
        out.migration_schedule.push_back(
            {evolving[i], comm[evolving[i]], target[evolving[i]],
             std::vector<std::size_t>(T, 0)});
    }

    out.network.construction = SliceParams{SliceStrategy::Direct, 0.0, 0.0, 0.0};
    out.network.vocab.resize(n);
    std::iota(out.network.vocab.begin(), out.network.vocab.end(), 0);
    out.network.snapshots.push_back(snapshot_from(g, 1));

    auto evo_eng = rng::engine(rng::derive(seed, "evolution"));
    std::vector<int> churn(n), adds(n), dels(n);
    std::unordered_set<std::uint64_t> added_now, deleted_now;
    std::vector<NodeId> evolving_order = evolving;

    // A stable node next to an evolving node that has not taken its turn yet
    // must keep one unit of churn headroom, or tight neighborhoods get
    // saturated to the cap before their owner can shed a single edge.
    std::vector<char> pending(n, 0);
    std::vector<int> reserved(n, 0);
    auto recompute_reserved = [&]() {
        std::fill(reserved.begin(), reserved.end(), 0);
        for (NodeId e : evolving)
            if (pending[e])
                for (NodeId nb : g.adj[e])
                    if (!is_evolving[nb]) reserved[nb] += 1;
    };
    auto stable_cap = [&](NodeId s) { return reserved[s] > 0 ? 1 : 2; };

    // Candidate filters shared by every evolution op. Deletions never orphan
    // the far endpoint, never undo an edge added this timestep, and never
    // remove a target-community edge of an evolving endpoint. Deletions use
    // the hard churn cap: an actor removing its own edge is the protected
    // use the reservation holds capacity for.
    auto may_delete = [&](NodeId e, NodeId nb) {
        if (added_now.count(ekey(e, nb))) return false;
        if (g.deg(nb) < 2) return false;
        if (is_evolving[nb]) {
            if (churn[nb] >= 5) return false;
            if (dels[nb] - adds[nb] > 0) return false;
            if (comm[e] == target[nb]) return false;
        } else if (churn[nb] >= 2) {
            return false;
        }
        return true;
    };
    auto stable_partner = [&](NodeId e, std::size_t community) -> std::optional<NodeId> {
        std::vector<NodeId> cands;
        for (NodeId s : stable_members[community])
            if (s != e && churn[s] < stable_cap(s) && !g.has(e, s) &&
                !deleted_now.count(ekey(e, s)))
                cands.push_back(s);
        if (const NodeId* s = pick_uniform(cands, evo_eng)) return *s;
        return std::nullopt;
    };

    for (std::size_t t = 2; t <= T; ++t) {
        // The turn protocol can corner a node whose whole neighborhood was
        // consumed by earlier turns. Rather than regenerate the series, replay
        // the one timestep with a fresh turn order until every ledger closes.
        const MutableGraph g_saved = g;
        bool stepped = false;
        for (int redo = 0; redo < 12 && !stepped; ++redo) {
            if (redo > 0) g = g_saved;
            evo_eng.seed(rng::derive(seed, "turns", t, std::uint64_t(redo)));
            stepped = true;
            std::fill(churn.begin(), churn.end(), 0);
            std::fill(adds.begin(), adds.end(), 0);
            std::fill(dels.begin(), dels.end(), 0);
            added_now.clear();
            deleted_now.clear();
            for (NodeId e : evolving) pending[e] = 1;
            // low-degree nodes move first: they have the fewest legal ops and
            // must grab partners before the neighborhood churn caps fill up
            std::shuffle(evolving_order.begin(), evolving_order.end(), evo_eng);
            std::stable_sort(evolving_order.begin(), evolving_order.end(),
                             [&](NodeId a, NodeId b) { return g.deg(a) < g.deg(b); });

            auto do_add = [&](NodeId u, NodeId v) {
                g.add(u, v);
                added_now.insert(ekey(u, v));
                churn[u] += 1;
                churn[v] += 1;
                adds[u] += 1;
                adds[v] += 1;
            };
            auto do_delete = [&](NodeId u, NodeId v) {
                g.remove(u, v);
                deleted_now.insert(ekey(u, v));
                churn[u] += 1;
                churn[v] += 1;
                dels[u] += 1;
                dels[v] += 1;
            };

            // A degree-1/2 evolving node depends entirely on its current
            // neighbors for the delete half of its ledger, and those neighbors
            // are shared resources. Give each such node its deletion up front,
            // while every neighborhood is still fresh; the rest of its budget is
            // add-side and draws on community-wide pools instead. The volume lost
            // here comes back through the balance guard, which biases the node
            // toward additions for the rest of the timestep.
            for (NodeId e : evolving_order) {
                if (g.deg(e) > 2) break;
                pending[e] = 0;
                recompute_reserved();
                std::vector<NodeId> nbs(g.adj[e].begin(), g.adj[e].end());
                std::shuffle(nbs.begin(), nbs.end(), evo_eng);
                bool done = false;
                for (NodeId nb : nbs) {
                    if (comm[nb] == target[e] || !may_delete(e, nb)) continue;
                    do_delete(e, nb);
                    done = true;
                    break;
                }
                // degree-1 neighbors cannot take a plain deletion; rehome them
                for (NodeId nb : nbs) {
                    if (done) break;
                    if (comm[nb] == target[e]) continue;
                    if (is_evolving[nb]) {
                        if (churn[nb] > 3 || comm[e] == target[nb]) continue;
                        if (auto home = stable_partner(nb, target[nb])) {
                            do_delete(e, nb);
                            do_add(nb, *home);
                            done = true;
                        }
                    } else {
                        if (churn[nb] != 0) continue;
                        if (auto home = stable_partner(nb, comm[nb])) {
                            do_delete(e, nb);
                            do_add(nb, *home);
                            done = true;
                        }
                    }
                }
                // every usable neighbor sits in the target community; pair
                // the deletion with a target addition so the community gains
                // as much as it loses this timestep
                if (!done) {
                    auto banked = stable_partner(e, target[e]);
                    for (NodeId nb : nbs) {
                        if (!banked) break;
                        if (comm[nb] != target[e]) continue;
                        if (is_evolving[nb]) {
                            if (churn[nb] > 3 || comm[e] == target[nb]) continue;
                            auto home = stable_partner(nb, target[nb]);
                            if (!home || *home == *banked) continue;
                            do_add(e, *banked);
                            do_delete(e, nb);
                            do_add(nb, *home);
                            break;
                        }
                        if (churn[nb] == 0 && g.deg(nb) >= 2) {
                            do_add(e, *banked);
                            do_delete(e, nb);
                            break;
                        }
                        if (churn[nb] == 0) {
                            auto home = stable_partner(nb, comm[nb]);
                            if (!home || *home == *banked) continue;
                            do_add(e, *banked);
                            do_delete(e, nb);
                            do_add(nb, *home);
                            break;
                        }
                    }
                }
                pending[e] = 1;
            }

            for (NodeId e : evolving_order) {
                pending[e] = 0;
                recompute_reserved();
                std::uniform_int_distribution<int> budget_dist(3, 5);
                const int budget = budget_dist(evo_eng);

                // non-target deletion candidates, source community first
                auto deletable = [&](bool target_ok) {
                    std::vector<NodeId> source_c, inter_c, target_c;
                    for (NodeId nb : g.adj[e]) {
                        if (!may_delete(e, nb)) continue;
                        if (comm[nb] == target[e]) {
                            if (target_ok && !is_evolving[nb]) target_c.push_back(nb);
                        } else if (comm[nb] == comm[e]) {
                            source_c.push_back(nb);
                        } else {
                            inter_c.push_back(nb);
                        }
                    }
                    if (!source_c.empty()) return source_c;
                    if (!inter_c.empty()) return inter_c;
                    return target_c;
                };

                // Net target-edge gain this turn; a target edge may only be shed
                // once the turn has banked a gain, so the per-timestep target
                // count never decreases.
                int tgt_gain = 0;

                // Two-edge moves. Each nets zero edges except the handoff (+1).
                auto try_pair = [&]() -> bool {
                    // migration pair: shed a non-target edge, gain a target one
                    auto cands = deletable(false);
                    if (const NodeId* del = pick_uniform(cands, evo_eng)) {
                        if (auto add = stable_partner(e, target[e])) {
                            do_delete(e, *del);
                            do_add(e, *add);
                            ++tgt_gain;
                            return true;
                        }
                    }
                    // swap inside the target community, net counts unchanged
                    std::vector<NodeId> tcands;
                    for (NodeId nb : g.adj[e])
                        if (comm[nb] == target[e] && !is_evolving[nb] && may_delete(e, nb))
                            tcands.push_back(nb);
                    if (const NodeId* del = pick_uniform(tcands, evo_eng)) {
                        if (auto add = stable_partner(e, target[e])) {
                            do_delete(e, *del);
                            do_add(e, *add);
                            return true;
                        }
                    }
                    // handoff: release a degree-1 stable neighbor, re-home it
                    // inside its own community, and take a target edge instead
                    std::vector<NodeId> hands;
                    for (NodeId nb : g.adj[e])
                        if (!is_evolving[nb] && comm[nb] != target[e] && g.deg(nb) == 1 &&
                            churn[nb] == 0 && !added_now.count(ekey(e, nb)))
                            hands.push_back(nb);
                    if (const NodeId* nb = pick_uniform(hands, evo_eng)) {
                        auto home = stable_partner(*nb, comm[*nb]);
                        auto add = stable_partner(e, target[e]);
                        if (home && add && *home != *add) {
                            do_delete(e, *nb);
                            do_add(*nb, *home);
                            do_add(e, *add);
                            ++tgt_gain;
                            return true;
                        }
                    }
                    return false;
                };

                // Single ops move e's ledger by exactly one but keep the global
                // edge count: a deletion bounces the freed neighbor to a fresh
                // partner in its own community, an addition steals one of the new
                // partner's spare edges. Without the compensation the odd budgets
                // would systematically inflate (or deflate) |E_t|.
                // bounce one pool entry: delete e's edge to it, re-home it inside
                // its own community so nobody loses presence
                auto bounce_delete = [&](std::vector<NodeId>& pool) -> bool {
                    std::shuffle(pool.begin(), pool.end(), evo_eng);
                    for (NodeId nb : pool) {
                        auto home = stable_partner(nb, comm[nb]);
                        if (!home) continue;
                        do_delete(e, nb);
                        do_add(nb, *home);
                        return true;
                    }
                    return false;
                };
                auto single_delete = [&]() -> bool {
                    std::vector<NodeId> src_c, inter_c, evo_c;
                    for (NodeId nb : g.adj[e]) {
                        if (added_now.count(ekey(e, nb)) || comm[nb] == target[e]) continue;
                        if (is_evolving[nb]) {
                            if (churn[nb] <= 3 && comm[e] != target[nb]) evo_c.push_back(nb);
                            continue;
                        }
                        if (churn[nb] != 0) continue;
                        (comm[nb] == comm[e] ? src_c : inter_c).push_back(nb);
                    }
                    if (bounce_delete(src_c) || bounce_delete(inter_c)) return true;
                    // evolving neighbor: bounce it toward its own migration target
                    std::shuffle(evo_c.begin(), evo_c.end(), evo_eng);
                    for (NodeId nb : evo_c) {
                        auto home = stable_partner(nb, target[nb]);
                        if (!home) continue;
                        do_delete(e, nb);
                        do_add(nb, *home);
                        return true;
                    }
                    // emergency plain deletion; costs one edge of volume, only
                    // reachable when every bounce partner is saturated
                    std::vector<NodeId> plain;
                    for (NodeId nb : g.adj[e])
                        if (may_delete(e, nb) && (comm[nb] != target[e] || tgt_gain >= 1))
                            plain.push_back(nb);
                    if (const NodeId* nb = pick_uniform(plain, evo_eng)) {
                        if (comm[*nb] == target[e]) --tgt_gain;
                        do_delete(e, *nb);
                        return true;
                    }
                    return false;
                };
                // last resort for a fully migrated node: shed a banked target edge
                auto single_delete_target = [&]() -> bool {
                    if (tgt_gain < 1) return false;
                    std::vector<NodeId> pool;
                    for (NodeId nb : g.adj[e])
                        if (!is_evolving[nb] && comm[nb] == target[e] && churn[nb] == 0 &&
                            !added_now.count(ekey(e, nb)))
                            pool.push_back(nb);
                    if (bounce_delete(pool)) {
                        --tgt_gain;
                        return true;
                    }
                    // evolving target-community neighbor: rehome it toward its own
                    // target, which advances its migration and stays orphan-safe
                    // even at degree one
                    std::vector<NodeId> evo_pool;
                    for (NodeId nb : g.adj[e])
                        if (is_evolving[nb] && comm[nb] == target[e] && churn[nb] <= 3 &&
                            comm[e] != target[nb] && !added_now.count(ekey(e, nb)))
                            evo_pool.push_back(nb);
                    std::shuffle(evo_pool.begin(), evo_pool.end(), evo_eng);
                    for (NodeId nb : evo_pool) {
                        auto home = stable_partner(nb, target[nb]);
                        if (!home) continue;
                        do_delete(e, nb);
                        do_add(nb, *home);
                        --tgt_gain;
                        return true;
                    }
                    return false;
                };
                auto single_add = [&]() -> bool {
                    auto from_comm = [&](std::size_t c) -> bool {
                        std::vector<NodeId> cands;
                        for (NodeId s : stable_members[c])
                            if (churn[s] == 0 && !g.has(e, s) && !deleted_now.count(ekey(e, s)))
                                cands.push_back(s);
                        std::shuffle(cands.begin(), cands.end(), evo_eng);
                        for (NodeId s : cands) {
                            std::vector<NodeId> spares;
                            for (NodeId x : g.adj[s])
                                if (!is_evolving[x] && g.deg(x) >= 2 && churn[x] < stable_cap(x) &&
                                    !added_now.count(ekey(s, x)))
                                    spares.push_back(x);
                            const NodeId* x = pick_uniform(spares, evo_eng);
                            if (!x) continue;
                            do_add(e, s);
                            do_delete(s, *x);
                            if (c == target[e]) ++tgt_gain;
                            return true;
                        }
                        return false;
                    };
                    // plain addition, the +1 volume twin of the plain deletion
                    // above; normally a fallback once no partner has a spare
                    auto plain_from = [&](std::size_t c) -> bool {
                        std::vector<NodeId> cands;
                        for (NodeId s : stable_members[c])
                            if (churn[s] < stable_cap(s) && !g.has(e, s) &&
                                !deleted_now.count(ekey(e, s)))
                                cands.push_back(s);
                        const NodeId* s = pick_uniform(cands, evo_eng);
                        if (!s) return false;
                        do_add(e, *s);
                        if (c == target[e]) ++tgt_gain;
                        return true;
                    };
                    if (from_comm(target[e])) return true;
                    // a fully migrated node can only shed banked target edges, so
                    // its addition must land in the target community or the next
                    // deletion never unlocks
                    bool fully_migrated = true;
                    for (NodeId nb : g.adj[e])
                        if (comm[nb] != target[e]) fully_migrated = false;
                    if (fully_migrated && plain_from(target[e])) return true;
                    for (std::size_t k = 0; k < K; ++k)
                        if (k != target[e] && k != comm[e] && from_comm(k)) return true;
                    if (plain_from(target[e])) return true;
                    for (std::size_t k = 0; k < K; ++k)
                        if (k != target[e] && k != comm[e] && plain_from(k)) return true;
                    return false;
                };

                while (churn[e] < budget) {
                    bool progressed = false;
                    if (budget - churn[e] >= 2) progressed = try_pair();
                    if (!progressed) {
                        // keep additions within one of deletions
                        const int balance = adds[e] - dels[e];
                        bool try_add = balance < 0 || (balance == 0 && (t + e) % 2 == 0);
                        for (int attempt = 0; attempt < 2 && !progressed; ++attempt) {
                            if (try_add && balance <= 0) {
                                progressed = single_add();
                            } else if (!try_add && balance >= 0) {
                                progressed = single_delete() || single_delete_target();
                            }
                            try_add = !try_add;
                        }
                    }
                    // overshooting the drawn budget by one is fine: the band that
                    // separates evolving from stable nodes is 3..5, not the draw
                    if (!progressed && churn[e] + 2 <= 5) progressed = try_pair();
                    if (!progressed) break;
                }
            }

            // passive ops from later turns still count toward a node's churn, so
            // the ledger and the feasibility floor are settled only now
            for (NodeId e : evolving) {
                out.migration_schedule[schedule_index[e]].rewired[t - 1] = churn[e];
                if (churn[e] < 3) {
                    stepped = false;
                    break;
                }
            }
            if (!stepped) continue;

            std::uniform_real_distribution<double> coin(0.0, 1.0);
            for (std::size_t c = 0; c < K; ++c) {
                for (NodeId s : stable_members[c]) {
                    if (churn[s] != 0) continue;
                    if (coin(evo_eng) >= config.stable_rewire_prob) continue;
                    std::vector<NodeId> old_c;
                    for (NodeId nb : g.adj[s])
                        if (!is_evolving[nb] && comm[nb] == c && churn[nb] < 2 && g.deg(nb) >= 2 &&
                            !added_now.count(ekey(s, nb)))
                            old_c.push_back(nb);
                    const NodeId* old_nb = pick_uniform(old_c, evo_eng);
                    if (!old_nb) continue;
                    auto new_nb = stable_partner(s, c);
                    if (!new_nb || *new_nb == *old_nb) continue;
                    do_delete(s, *old_nb);
                    do_add(s, *new_nb);
                }
            }
        }
        if (!stepped) return std::nullopt;

        out.network.snapshots.push_back(snapshot_from(g, int(t)));

        for (NodeId e : evolving) {
            std::size_t src_cnt = 0, tgt_cnt = 0;
            for (NodeId nb : g.adj[e]) {
                if (comm[nb] == comm[e]) ++src_cnt;
                else if (comm[nb] == target[e]) ++tgt_cnt;
            }
            const std::size_t prev = out.community_of[t - 2][e];
            std::size_t label = prev;
            if (tgt_cnt > src_cnt) label = target[e];
            else if (tgt_cnt < src_cnt) label = comm[e];
            out.community_of[t - 1][e] = label;
        }
        for (NodeId v = 0; v < n; ++v)
            if (!is_evolving[v]) out.community_of[t - 1][v] = comm[v];
    }

    return out;
}

} // namespace

SynthNetwork generate(const SynthConfig& config) {
    config.validate();
    // Evolution occasionally corners a node with no legal move left. A fresh
    // sub-seed redraws everything; the attempt count is reported so callers
    // can see how contorted a config is.
    constexpr std::uint64_t kMaxAttempts = 20;
    for (std::uint64_t attempt = 0; attempt < kMaxAttempts; ++attempt) {
        const std::uint64_t seed =
            attempt == 0 ? config.seed : rng::derive(config.seed, "retry", attempt);
        if (auto out = generate_attempt(config, seed)) {
            out->regenerations = attempt;
            return std::move(*out);
        }
    }
    std::ostringstream msg;
    msg << "generation could not satisfy the evolving churn bounds after " << kMaxAttempts
        << " attempts; the config leaves too few rewiring partners";
    throw DataError(msg.str());
}

void dump_synth(const SynthNetwork& synth, const SynthConfig& config, const std::string& dir) {
    dump_snapshots(synth.network, dir);

    std::vector<std::uint8_t> is_evolving(config.n, 0);
    for (NodeId e : synth.evolving_nodes) is_evolving[e] = 1;

    std::ofstream gt(fs::path(dir) / "ground_truth.txt");
    if (!gt) throw DataError("cannot write ground truth in " + dir);
    for (NodeId v = 0; v < config.n; ++v) {
        gt << synth.network.vocab[v] << " " << int(is_evolving[v]);
        for (std::size_t t = 0; t < config.timesteps; ++t)
            gt << " " << synth.community_of[t][v];
        gt << "\n";
    }

    json manifest;
    manifest["n"] = config.n;
    manifest["alpha_pl"] = config.alpha_pl;
    manifest["c"] = config.c;
    manifest["communities"] = config.communities;
    manifest["evolving_fraction"] = config.evolving_fraction;
    manifest["timesteps"] = config.timesteps;
    manifest["intra_ratio"] = config.intra_ratio;
    manifest["stable_rewire_prob"] = config.stable_rewire_prob;
    manifest["seed"] = config.seed;
    manifest["evolving_count"] = synth.evolving_nodes.size();
    manifest["regenerations"] = synth.regenerations;
    std::ofstream mf(fs::path(dir) / "synth_config.json");
    if (!mf) throw DataError("cannot write synth config in " + dir);
    mf << manifest.dump(2) << "\n";
}

GroundTruth load_ground_truth(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open ground truth file " + path);
    GroundTruth gt;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::uint64_t label = 0;
        int flag = 0;
        if (!(row >> label >> flag) || (flag != 0 && flag != 1)) {
            std::ostringstream msg;
            msg << path << " line " << lineno << ": expected 'node flag communities...'";
            throw ParseError(msg.str());
        }
        std::vector<std::size_t> comms;
        std::size_t cm = 0;
        while (row >> cm) comms.push_back(cm);
        if (!gt.community.empty() && comms.size() != gt.community.front().size()) {
            std::ostringstream msg;
            msg << path << " line " << lineno << ": inconsistent community column count";
            throw ParseError(msg.str());
        }
        gt.labels.push_back(label);
        if (flag == 1) gt.evolving.push_back(label);
        gt.community.push_back(std::move(comms));
    }
    if (gt.labels.empty()) throw ParseError("ground truth file " + path + " is empty");
    std::sort(gt.evolving.begin(), gt.evolving.end());
    return gt;
}

} // namespace dynembed
