#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dynembed/dbe.hpp"
#include "dynembed/temporal_graph.hpp"

namespace dynembed {

struct EvalReport {
    std::string task;
    std::map<std::string, double> metrics; // AUC or MAP/MRR/TOPK, all in [0,1]
    std::vector<double> folds;             // per-fold AUC where applicable
    std::uint64_t seed = 0;
    std::string config_hash;

    std::string to_json() const;
};

// Rank-based AUC with tie averaging; invariant under strictly monotone
// transforms of the scores.
double mann_whitney_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

// Positives are the distinct test pairs whose endpoints both occur in the
// training stream; negatives are an equal count of uniformly sampled
// non-edges (absent from train and test). Each pair's feature is the
// per-dimension squared difference at the final timestep plus its L2 norm.
// A from-scratch logistic regression is scored over 5 stratified folds.
EvalReport link_prediction(const EmbeddingSet& emb, const EventStream& train_stream,
                           const EventStream& test_stream, std::uint64_t seed);

// Per-transition displacement rankings and the global evolving ranking.
// Transition tr covers timesteps tr -> tr+1 (0-based).
struct ActivityRanking {
    std::size_t transitions = 0;
    std::vector<std::vector<NodeId>> ranking;      // per transition, displacement desc
    std::vector<std::vector<NodeId>> active_sets;  // top ceil(10%) per transition
    std::vector<std::vector<double>> displacement; // [transition][node], NaN = absent
    std::vector<NodeId> evolving_ranking; // active-count desc, total displacement desc, id
    std::vector<std::size_t> active_count;     // [node]
    std::vector<double> total_displacement;    // [node]
};

// Nodes absent at either endpoint of a transition are excluded from that
// transition's ranking. An empty presence table means every row is present
// at every timestep.
ActivityRanking detect_evolving(const EmbeddingSet& emb,
                                const std::vector<std::vector<NodeId>>& presence);

// MAP, MRR and TOP-K of a ranking against the relevant set; k = 0 means
// k = |ground_truth|.
EvalReport ranking_metrics(const std::vector<NodeId>& ranking,
                           const std::vector<NodeId>& ground_truth, std::size_t k = 0);

// CSV rows (node, t, vector, displacement, active flag) for the requested
// nodes, given by original label. Displacement on row t is the move from t
// to t+1; the final row's displacement and active fields stay empty.
void export_trajectories(const EmbeddingSet& emb,
                         const std::vector<std::vector<NodeId>>& presence,
                         const std::vector<std::uint64_t>& nodes, std::ostream& out);

} // namespace dynembed
