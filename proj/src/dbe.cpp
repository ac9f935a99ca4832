#include "dynembed/dbe.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "dynembed/errors.hpp"
#include "dynembed/rng.hpp"

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace dynembed {

namespace {

constexpr double kEtaClamp = 30.0;

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double log_sigmoid(double x) {
    x = std::clamp(x, -kEtaClamp, kEtaClamp);
    if (x >= 0.0) return -std::log1p(std::exp(-x));
    return x - std::log1p(std::exp(x));
}

} // namespace

void TrainConfig::validate() const {
    if (dim == 0) throw DataError("embedding dimension must be positive");
    if (context == 0 || context % 2 != 0)
        throw DataError("context size must be a positive even number");
    if (negatives == 0) throw DataError("negative sample count must be positive");
    if (!(lambda1 > 0.0) || !(lambda > 0.0))
        throw DataError("prior precisions lambda1 and lambda must be positive");
    if (!(learning_rate > 0.0) || !(min_learning_rate > 0.0))
        throw DataError("learning rates must be positive");
    if (min_learning_rate > learning_rate)
        throw DataError("min learning rate exceeds initial learning rate");
    if (epochs == 0) throw DataError("epoch count must be positive");
}

bool EmbeddingSet::all_finite() const {
    for (double v : alpha)
        if (!std::isfinite(v)) return false;
    for (const auto& mat : m)
        for (double v : mat)
            if (!std::isfinite(v)) return false;
    return true;
}

NegativeSampler::NegativeSampler(std::vector<double> weights) {
    cumulative_.resize(weights.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] < 0.0 || !std::isfinite(weights[i]))
            throw DataError("negative sampler weights must be finite and non-negative");
        if (weights[i] > 0.0) ++support_;
        acc += weights[i];
        cumulative_[i] = acc;
    }
    total_ = acc;
    if (!(total_ > 0.0)) throw DataError("negative sampler has empty support");
}

NegativeSampler NegativeSampler::from_corpus(const WalkSet& walks, std::size_t vocab_size,
                                             double power) {
    std::vector<double> counts(vocab_size, 0.0);
    for (NodeId v : walks.data) {
        if (v >= vocab_size) throw DataError("walk corpus references node outside vocabulary");
        counts[v] += 1.0;
    }
    for (double& c : counts)
        if (c > 0.0) c = std::pow(c, power);
    return NegativeSampler(std::move(counts));
}

NodeId NegativeSampler::sample(std::mt19937_64& eng) const {
    std::uniform_real_distribution<double> u(0.0, total_);
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u(eng));
    if (it == cumulative_.end()) --it;
    return static_cast<NodeId>(it - cumulative_.begin());
}

double NegativeSampler::probability(NodeId g) const {
    if (g >= cumulative_.size()) return 0.0;
    double prev = g == 0 ? 0.0 : cumulative_[g - 1];
    return (cumulative_[g] - prev) / total_;
}

EmbeddingSet init_embeddings(std::size_t vocab_size, std::size_t timesteps,
                             const TrainConfig& config) {
    EmbeddingSet emb;
    emb.timesteps = timesteps;
    emb.rows = vocab_size;
    emb.dim = config.dim;
    const std::size_t n = vocab_size * config.dim;

    auto eng = rng::engine(rng::derive(config.seed, "init"));
    std::normal_distribution<double> base(0.0, 1.0 / std::sqrt(config.lambda1));
    std::normal_distribution<double> step(0.0, 1.0 / std::sqrt(config.lambda));

    emb.alpha.resize(n);
    for (double& v : emb.alpha) v = base(eng);

    emb.m.resize(timesteps);
    for (std::size_t t = 0; t < timesteps; ++t) {
        emb.m[t].resize(n);
        if (t == 0) {
            for (double& v : emb.m[0]) v = base(eng);
        } else {
            for (std::size_t i = 0; i < n; ++i) emb.m[t][i] = emb.m[t - 1][i] + step(eng);
        }
    }
    return emb;
}

double sigmoid(double x) {
    x = std::clamp(x, -kEtaClamp, kEtaClamp);
    return 1.0 / (1.0 + std::exp(-x));
}

double eta(std::span<const double> y_row, std::span<const double> context_sum) {
    return dot(y_row, context_sum);
}

namespace {

void sum_context(const EmbeddingSet& emb, const std::vector<NodeId>& context,
                 std::vector<double>& out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (NodeId v : context) {
        auto a = emb.alpha_row(v);
        for (std::size_t d = 0; d < out.size(); ++d) out[d] += a[d];
    }
}

double prior_terms(const EmbeddingSet& emb, const TrainConfig& config) {
    double sq_base = 0.0;
    for (double v : emb.alpha) sq_base += v * v;
    if (!emb.m.empty())
        for (double v : emb.m[0]) sq_base += v * v;
    double sq_drift = 0.0;
    for (std::size_t t = 1; t < emb.timesteps; ++t) {
        const auto& cur = emb.m[t];
        const auto& prev = emb.m[t - 1];
        for (std::size_t i = 0; i < cur.size(); ++i) {
            double d = cur[i] - prev[i];
            sq_drift += d * d;
        }
    }
    return -0.5 * config.lambda1 * sq_base - 0.5 * config.lambda * sq_drift;
}

} // namespace

double objective(const EmbeddingSet& emb, std::span<const ContextWindow> batch,
                 const TrainConfig& config) {
    std::vector<double> s(emb.dim);
    double data = 0.0;
    for (const auto& w : batch) {
        sum_context(emb, w.context, s);
        data += log_sigmoid(eta(emb.row(w.timestep, w.center), s));
        for (NodeId g : w.negatives) data += log_sigmoid(-eta(emb.row(w.timestep, g), s));
    }
    return data + prior_terms(emb, config);
}

EmbeddingGradient objective_gradient(const EmbeddingSet& emb,
                                     std::span<const ContextWindow> batch,
                                     const TrainConfig& config) {
    EmbeddingGradient grad;
    grad.alpha.assign(emb.alpha.size(), 0.0);
    grad.m.resize(emb.timesteps);
    for (std::size_t t = 0; t < emb.timesteps; ++t) grad.m[t].assign(emb.m[t].size(), 0.0);

    const std::size_t dim = emb.dim;
    std::vector<double> s(dim), ge(dim);

    auto grow = [&](std::vector<double>& mat, NodeId g) {
        return std::span<double>{mat.data() + std::size_t(g) * dim, dim};
    };

    for (const auto& w : batch) {
        sum_context(emb, w.context, s);
        std::fill(ge.begin(), ge.end(), 0.0);

        auto yc = emb.row(w.timestep, w.center);
        double a = 1.0 - sigmoid(eta(yc, s));
        auto gc = grow(grad.m[w.timestep], w.center);
        for (std::size_t d = 0; d < dim; ++d) {
            gc[d] += a * s[d];
            ge[d] += a * yc[d];
        }
        for (NodeId g : w.negatives) {
            auto yg = emb.row(w.timestep, g);
            double b = sigmoid(eta(yg, s));
            auto gg = grow(grad.m[w.timestep], g);
            for (std::size_t d = 0; d < dim; ++d) {
                gg[d] -= b * s[d];
                ge[d] -= b * yg[d];
            }
        }
        for (NodeId v : w.context) {
            auto ga = std::span<double>{grad.alpha.data() + std::size_t(v) * dim, dim};
            for (std::size_t d = 0; d < dim; ++d) ga[d] += ge[d];
        }
    }

    // Gaussian priors: alpha and the first matrix shrink toward zero, each
    // later matrix couples to its predecessor through the drift term.
    for (std::size_t i = 0; i < emb.alpha.size(); ++i)
        grad.alpha[i] -= config.lambda1 * emb.alpha[i];
    if (!emb.m.empty())
        for (std::size_t i = 0; i < emb.m[0].size(); ++i)
            grad.m[0][i] -= config.lambda1 * emb.m[0][i];
    for (std::size_t t = 1; t < emb.timesteps; ++t) {
        for (std::size_t i = 0; i < emb.m[t].size(); ++i) {
            double d = emb.m[t][i] - emb.m[t - 1][i];
            grad.m[t][i] -= config.lambda * d;
            grad.m[t - 1][i] += config.lambda * d;
        }
    }
    return grad;
}

namespace {

struct LrSchedule {
    double lr0, lr_min;
    std::size_t total;
    double at(std::size_t k) const {
        if (total == 0) return lr0;
        double f = double(k) / double(total);
        return std::max(lr_min, lr0 - (lr0 - lr_min) * f);
    }
};

// One pass of stochastic ascent over a single walk. Negatives come from the
// caller-provided engine so the draw sequence depends only on (seed, epoch,
// timestep, walk index), never on thread scheduling.
void train_walk(EmbeddingSet& emb, std::size_t t, std::span<const NodeId> walk,
                const TrainConfig& config, const NegativeSampler& sampler,
                std::mt19937_64& eng, std::atomic<std::size_t>& position,
                const LrSchedule& sched, std::vector<double>& s, std::vector<double>& ge) {
    const std::size_t dim = emb.dim;
    const std::size_t h = config.context / 2;
    const std::size_t L = walk.size();

    for (std::size_t i = 0; i < L; ++i) {
        const NodeId center = walk[i];
        const std::size_t lo = i > h ? i - h : 0;
        const std::size_t hi = std::min(L - 1, i + h);

        const double lr = sched.at(position.fetch_add(1, std::memory_order_relaxed));
        if (hi == lo) continue; // no context at walk length 1

        std::fill(s.begin(), s.end(), 0.0);
        for (std::size_t j = lo; j <= hi; ++j) {
            if (j == i) continue;
            auto a = emb.alpha_row(walk[j]);
            for (std::size_t d = 0; d < dim; ++d) s[d] += a[d];
        }
        std::fill(ge.begin(), ge.end(), 0.0);

        auto yc = emb.row(t, center);
        double g = (1.0 - sigmoid(eta(yc, s))) * lr;
        for (std::size_t d = 0; d < dim; ++d) {
            double old = yc[d];
            ge[d] += g * old;
            yc[d] = old + g * s[d];
        }

        for (std::size_t k = 0; k < config.negatives; ++k) {
            NodeId neg = sampler.sample(eng);
            for (int tries = 0; neg == center && tries < 100; ++tries) neg = sampler.sample(eng);
            if (neg == center) continue;
            auto yn = emb.row(t, neg);
            double gn = -sigmoid(eta(yn, s)) * lr;
            for (std::size_t d = 0; d < dim; ++d) {
                double old = yn[d];
                ge[d] += gn * old;
                yn[d] = old + gn * s[d];
            }
        }

        for (std::size_t j = lo; j <= hi; ++j) {
            if (j == i) continue;
            auto a = emb.alpha_row(walk[j]);
            for (std::size_t d = 0; d < dim; ++d) a[d] += ge[d];
        }
    }
}

// Explicit gradient step on the prior terms once per epoch. The step factor
// is capped so lr * lambda cannot exceed the stability limit of the chain
// coupling (the data pass already uses the raw schedule).
void prior_pass(EmbeddingSet& emb, double lr, const TrainConfig& config,
                std::vector<double>& tmp) {
    const std::size_t dim = emb.dim;
    const std::size_t T = emb.timesteps;

    const double lr_a = std::min(lr, 0.25 / config.lambda1);
    const double shrink = 1.0 - lr_a * config.lambda1;
    for (double& v : emb.alpha) v *= shrink;

    // With a single timestep there is no chain coupling, so lambda must not
    // influence the step (training then reduces to the static model).
    const double m_precision =
        T > 1 ? std::max(config.lambda, config.lambda1) : config.lambda1;
    const double lr_m = std::min(lr, 0.25 / m_precision);
    tmp.resize(T * dim);
    for (NodeId g = 0; g < emb.rows; ++g) {
        for (std::size_t t = 0; t < T; ++t) {
            auto y = emb.row(t, g);
            std::copy(y.begin(), y.end(), tmp.begin() + t * dim);
        }
        for (std::size_t t = 0; t < T; ++t) {
            auto y = emb.row(t, g);
            const double* cur = tmp.data() + t * dim;
            const double* prev = t > 0 ? tmp.data() + (t - 1) * dim : nullptr;
            const double* next = t + 1 < T ? tmp.data() + (t + 1) * dim : nullptr;
            for (std::size_t d = 0; d < dim; ++d) {
                double grad = 0.0;
                if (t == 0) grad -= config.lambda1 * cur[d];
                if (prev) grad -= config.lambda * (cur[d] - prev[d]);
                if (next) grad += config.lambda * (next[d] - cur[d]);
                y[d] = cur[d] + lr_m * grad;
            }
        }
    }
}

// Data term of the objective over the whole corpus with a fixed,
// epoch-independent negative draw, so the per-epoch trace is comparable.
double trace_objective(const EmbeddingSet& emb, const std::vector<WalkSet>& corpus,
                       const std::vector<std::optional<NegativeSampler>>& samplers,
                       const TrainConfig& config) {
    const std::size_t dim = emb.dim;
    const std::size_t h = config.context / 2;
    std::vector<double> s(dim);
    double data = 0.0;

    for (std::size_t t = 0; t < corpus.size(); ++t) {
        const auto& ws = corpus[t];
        if (ws.num_walks() == 0) continue;
        const auto& sampler = *samplers[t];
        for (std::size_t w = 0; w < ws.num_walks(); ++w) {
            auto eng = rng::engine(rng::derive(config.seed, "obj", t, w));
            auto walk = ws.walk(w);
            const std::size_t L = walk.size();
            for (std::size_t i = 0; i < L; ++i) {
                const NodeId center = walk[i];
                const std::size_t lo = i > h ? i - h : 0;
                const std::size_t hi = std::min(L - 1, i + h);
                if (hi == lo) continue;
                std::fill(s.begin(), s.end(), 0.0);
                for (std::size_t j = lo; j <= hi; ++j) {
                    if (j == i) continue;
                    auto a = emb.alpha_row(walk[j]);
                    for (std::size_t d = 0; d < dim; ++d) s[d] += a[d];
                }
                data += log_sigmoid(eta(emb.row(t, center), s));
                for (std::size_t k = 0; k < config.negatives; ++k) {
                    NodeId neg = sampler.sample(eng);
                    for (int tries = 0; neg == center && tries < 100; ++tries)
                        neg = sampler.sample(eng);
                    if (neg == center) continue;
                    data += log_sigmoid(-eta(emb.row(t, neg), s));
                }
            }
        }
    }
    return data + prior_terms(emb, config);
}

void throw_non_finite(const EmbeddingSet& emb, std::size_t epoch, double lr) {
    for (std::size_t t = 0; t < emb.timesteps; ++t)
        for (NodeId g = 0; g < emb.rows; ++g)
            for (double v : emb.row(t, g))
                if (!std::isfinite(v)) {
                    std::ostringstream msg;
                    msg << "training diverged: non-finite embedding at epoch " << epoch + 1
                        << ", timestep " << t + 1 << ", row " << g << " (learning rate " << lr
                        << "); lower the learning rate or raise lambda";
                    throw NumericError(msg.str());
                }
    for (NodeId g = 0; g < emb.rows; ++g)
        for (double v : emb.alpha_row(g))
            if (!std::isfinite(v)) {
                std::ostringstream msg;
                msg << "training diverged: non-finite context row " << g << " at epoch "
                    << epoch + 1 << " (learning rate " << lr << ")";
                throw NumericError(msg.str());
            }
}

} // namespace

TrainResult train(const DynamicNetwork& network, const std::vector<WalkSet>& corpus,
                  const TrainConfig& config) {
    config.validate();
    const std::size_t T = network.timestep_count();
    const std::size_t V = network.vocab_size();
    if (T == 0 || V == 0) throw DataError("cannot train on an empty network");
    if (corpus.size() != T) {
        std::ostringstream msg;
        msg << "walk corpus covers " << corpus.size() << " timesteps but network has " << T;
        throw DataError(msg.str());
    }

    TrainResult result;
    if (!config.pretrained_dir.empty()) {
        EmbeddingBundle pre = load_embeddings(config.pretrained_dir);
        if (pre.embeddings.dim != config.dim || pre.embeddings.timesteps != T ||
            pre.embeddings.rows != V || pre.embeddings.labels != network.vocab) {
            std::ostringstream msg;
            msg << "pretrained embeddings do not match: have " << pre.embeddings.rows << "x"
                << pre.embeddings.dim << " over " << pre.embeddings.timesteps
                << " timesteps, need " << V << "x" << config.dim << " over " << T;
            throw DataError(msg.str());
        }
        result.embeddings = std::move(pre.embeddings);
    } else {
        result.embeddings = init_embeddings(V, T, config);
    }
    EmbeddingSet& emb = result.embeddings;
    emb.labels = network.vocab;

    result.presence.resize(T);
    for (std::size_t t = 0; t < T; ++t) result.presence[t] = network.snapshots[t].nodes;

    std::vector<std::optional<NegativeSampler>> samplers(T);
    std::size_t epoch_positions = 0;
    for (std::size_t t = 0; t < T; ++t) {
        if (corpus[t].num_walks() == 0) continue;
        samplers[t].emplace(NegativeSampler::from_corpus(corpus[t], V));
        epoch_positions += corpus[t].num_walks() * corpus[t].walk_length;
    }
    if (epoch_positions == 0) throw DataError("walk corpus is empty");

    LrSchedule sched{config.learning_rate, config.min_learning_rate,
                     epoch_positions * config.epochs};
    std::atomic<std::size_t> position{0};

    unsigned workers = config.workers;
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());

    std::vector<double> s(emb.dim), ge(emb.dim), tmp;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t t = 0; t < T; ++t) {
            const auto& ws = corpus[t];
            const std::size_t n = ws.num_walks();
            if (n == 0) continue;
            const auto& sampler = *samplers[t];

            if (workers <= 1 || n < 2 * workers) {
                for (std::size_t w = 0; w < n; ++w) {
                    auto eng = rng::engine(rng::derive(config.seed, "neg", epoch, t, w));
                    train_walk(emb, t, ws.walk(w), config, sampler, eng, position, sched, s, ge);
                }
            } else {
                std::vector<std::thread> pool;
                const std::size_t chunk = (n + workers - 1) / workers;
                for (unsigned wk = 0; wk < workers; ++wk) {
                    const std::size_t lo = wk * chunk;
                    const std::size_t hi = std::min(n, lo + chunk);
                    if (lo >= hi) break;
                    pool.emplace_back([&, lo, hi, t, epoch] {
                        std::vector<double> ls(emb.dim), lge(emb.dim);
                        for (std::size_t w = lo; w < hi; ++w) {
                            auto eng =
                                rng::engine(rng::derive(config.seed, "neg", epoch, t, w));
                            train_walk(emb, t, ws.walk(w), config, sampler, eng, position,
                                       sched, ls, lge);
                        }
                    });
                }
                for (auto& th : pool) th.join();
            }
        }

        const double lr_now = sched.at(position.load(std::memory_order_relaxed));
        prior_pass(emb, lr_now, config, tmp);
        if (!emb.all_finite()) throw_non_finite(emb, epoch, lr_now);
        if (config.track_objective)
            result.objective_trace.push_back(trace_objective(emb, corpus, samplers, config));
    }
    return result;
}

namespace {

void write_matrix(const fs::path& path, const std::vector<double>& mat,
                  const std::vector<std::uint64_t>& labels, std::size_t dim) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    const std::size_t rows = labels.size();
    out << rows << " " << dim << "\n";
    char buf[32];
    for (std::size_t r = 0; r < rows; ++r) {
        out << labels[r];
        for (std::size_t d = 0; d < dim; ++d) {
            std::snprintf(buf, sizeof buf, "%.17g", mat[r * dim + d]);
            out << " " << buf;
        }
        out << "\n";
    }
    if (!out) throw DataError("failed writing " + path.string());
}

std::vector<double> read_matrix(const fs::path& path, std::size_t expect_rows,
                                std::size_t expect_dim,
                                const std::vector<std::uint64_t>& labels) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::size_t rows = 0, dim = 0;
    if (!(in >> rows >> dim)) throw DataError("bad header in " + path.string());
    if (rows != expect_rows || dim != expect_dim) {
        std::ostringstream msg;
        msg << path.string() << ": dimension mismatch, file is " << rows << "x" << dim
            << " but manifest says " << expect_rows << "x" << expect_dim;
        throw DataError(msg.str());
    }
    std::vector<double> mat(rows * dim);
    for (std::size_t r = 0; r < rows; ++r) {
        std::uint64_t label = 0;
        if (!(in >> label)) throw DataError("truncated matrix in " + path.string());
        if (label != labels[r])
            throw DataError(path.string() + ": row labels disagree with manifest");
        // strtod instead of stream extraction: nan/inf tokens are legal values
        // (the finiteness check in train() owns the diagnostic for them).
        std::string tok;
        for (std::size_t d = 0; d < dim; ++d) {
            if (!(in >> tok)) throw DataError("truncated matrix in " + path.string());
            char* end = nullptr;
            mat[r * dim + d] = std::strtod(tok.c_str(), &end);
            if (end != tok.c_str() + tok.size())
                throw DataError(path.string() + ": bad value '" + tok + "'");
        }
    }
    return mat;
}

std::string matrix_name(std::size_t t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "embedding_t%03zu.txt", t + 1);
    return buf;
}

} // namespace

void save_embeddings(const std::string& dir, const TrainResult& result,
                     const TrainConfig& config) {
    const EmbeddingSet& emb = result.embeddings;
    fs::create_directories(dir);
    for (std::size_t t = 0; t < emb.timesteps; ++t)
        write_matrix(fs::path(dir) / matrix_name(t), emb.m[t], emb.labels, emb.dim);
    write_matrix(fs::path(dir) / "alpha.txt", emb.alpha, emb.labels, emb.dim);

    json manifest;
    manifest["timesteps"] = emb.timesteps;
    manifest["rows"] = emb.rows;
    manifest["dim"] = emb.dim;
    manifest["seed"] = config.seed;
    manifest["config"] = {{"dim", config.dim},
                          {"context", config.context},
                          {"negatives", config.negatives},
                          {"lambda1", config.lambda1},
                          {"lambda", config.lambda},
                          {"learning_rate", config.learning_rate},
                          {"min_learning_rate", config.min_learning_rate},
                          {"epochs", config.epochs}};
    manifest["objective_trace"] = result.objective_trace;
    manifest["labels"] = emb.labels;
    json presence = json::array();
    for (const auto& nodes : result.presence) presence.push_back(nodes);
    manifest["presence"] = presence;

    std::ofstream mf(fs::path(dir) / "manifest.json");
    if (!mf) throw DataError("cannot write manifest in " + dir);
    mf << manifest.dump(2) << "\n";
}

EmbeddingBundle load_embeddings(const std::string& dir) {
    std::ifstream mf(fs::path(dir) / "manifest.json");
    if (!mf) throw DataError("no embedding manifest in " + dir);
    json manifest;
    try {
        mf >> manifest;
    } catch (const json::exception& e) {
        throw DataError("bad embedding manifest in " + dir + ": " + e.what());
    }

    EmbeddingBundle bundle;
    EmbeddingSet& emb = bundle.embeddings;
    try {
        emb.timesteps = manifest.at("timesteps").get<std::size_t>();
        emb.rows = manifest.at("rows").get<std::size_t>();
        emb.dim = manifest.at("dim").get<std::size_t>();
        emb.labels = manifest.at("labels").get<std::vector<std::uint64_t>>();
        bundle.presence =
            manifest.at("presence").get<std::vector<std::vector<NodeId>>>();
    } catch (const json::exception& e) {
        throw DataError("bad embedding manifest in " + dir + ": " + e.what());
    }
    if (emb.labels.size() != emb.rows)
        throw DataError("embedding manifest label table does not match row count");
    if (bundle.presence.size() != emb.timesteps)
        throw DataError("embedding manifest presence does not match timestep count");

    emb.m.resize(emb.timesteps);
    for (std::size_t t = 0; t < emb.timesteps; ++t)
        emb.m[t] = read_matrix(fs::path(dir) / matrix_name(t), emb.rows, emb.dim, emb.labels);
    emb.alpha = read_matrix(fs::path(dir) / "alpha.txt", emb.rows, emb.dim, emb.labels);
    return bundle;
}

} // namespace dynembed
