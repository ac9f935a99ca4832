#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dynembed/temporal_graph.hpp"
#include "dynembed/walks.hpp"

namespace dynembed {

struct TrainConfig {
    std::size_t dim = 128;
    std::size_t context = 4;    // cs, even
    std::size_t negatives = 10; // ns
    double lambda1 = 1.0;       // prior precision on alpha and M_1
    double lambda = 1000.0;     // drift precision coupling consecutive M_t
    double learning_rate = 0.025;
    double min_learning_rate = 1e-4; // linear decay floor, reached at the end
    std::size_t epochs = 5;
    std::uint64_t seed = 1;
    unsigned workers = 1; // 1 = deterministic, >1 = lock-free asynchronous
    bool track_objective = true;
    std::string pretrained_dir; // empty = sample from the Gaussian priors

    void validate() const; // throws DataError
};

// Per-timestep embedding matrices M_1..M_T over the global vocabulary plus
// the single context matrix alpha shared by every timestep.
struct EmbeddingSet {
    std::size_t timesteps = 0;
    std::size_t rows = 0;
    std::size_t dim = 0;
    std::vector<std::vector<double>> m; // timesteps matrices, row-major rows x dim
    std::vector<double> alpha;          // rows x dim
    std::vector<std::uint64_t> labels;  // dense id -> original label

    std::span<double> row(std::size_t t, NodeId g) {
        return {m[t].data() + std::size_t(g) * dim, dim};
    }
    std::span<const double> row(std::size_t t, NodeId g) const {
        return {m[t].data() + std::size_t(g) * dim, dim};
    }
    std::span<double> alpha_row(NodeId g) { return {alpha.data() + std::size_t(g) * dim, dim}; }
    std::span<const double> alpha_row(NodeId g) const {
        return {alpha.data() + std::size_t(g) * dim, dim};
    }
    bool all_finite() const;
};

// Draws nodes proportionally to corpus unigram count raised to a power.
class NegativeSampler {
  public:
    explicit NegativeSampler(std::vector<double> weights); // unnormalized, zeros fine
    static NegativeSampler from_corpus(const WalkSet& walks, std::size_t vocab_size,
                                       double power = 0.75);

    NodeId sample(std::mt19937_64& eng) const;
    double probability(NodeId g) const;
    std::size_t support_size() const { return support_; }

  private:
    std::vector<double> cumulative_;
    double total_ = 0.0;
    std::size_t support_ = 0;
};

// alpha and M_1 are N(0, 1/lambda1) per entry; M_t = M_{t-1} + N(0, 1/lambda).
EmbeddingSet init_embeddings(std::size_t vocab_size, std::size_t timesteps,
                             const TrainConfig& config);

double sigmoid(double x); // argument clamped to [-30, 30]
double eta(std::span<const double> y_row, std::span<const double> context_sum);

// One training example: a walk position with its context window and the
// negatives drawn for it. Used by the objective/gradient pair and the tests.
struct ContextWindow {
    std::size_t timestep = 0; // 0-based
    NodeId center = 0;
    std::vector<NodeId> context;
    std::vector<NodeId> negatives;
};

// Regularized pseudo log likelihood: positive and sampled-negative data terms
// plus the Gaussian priors on alpha, M_1 and consecutive drifts. The trainer
// maximizes this value.
double objective(const EmbeddingSet& emb, std::span<const ContextWindow> batch,
                 const TrainConfig& config);

struct EmbeddingGradient {
    std::vector<std::vector<double>> m;
    std::vector<double> alpha;
};

// Full analytic gradient of objective() with respect to every row.
EmbeddingGradient objective_gradient(const EmbeddingSet& emb,
                                     std::span<const ContextWindow> batch,
                                     const TrainConfig& config);

struct TrainResult {
    EmbeddingSet embeddings;
    std::vector<double> objective_trace;       // one entry per epoch
    std::vector<std::vector<NodeId>> presence; // V_t per timestep, dense ids
};

TrainResult train(const DynamicNetwork& network, const std::vector<WalkSet>& corpus,
                  const TrainConfig& config);

// Matrix files ("num_rows dim" header, then "label v_1 .. v_dim" rows) plus a
// manifest carrying config, seed, per-epoch objective trace and presence.
void save_embeddings(const std::string& dir, const TrainResult& result,
                     const TrainConfig& config);

struct EmbeddingBundle {
    EmbeddingSet embeddings;
    std::vector<std::vector<NodeId>> presence;
};

EmbeddingBundle load_embeddings(const std::string& dir);

} // namespace dynembed
