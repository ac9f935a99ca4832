#include "dynembed/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "dynembed/errors.hpp"
#include "dynembed/rng.hpp"

#include <nlohmann/json.hpp>

using json = nlohmann::json;

namespace dynembed {

namespace {

struct PairHash {
    std::size_t operator()(const std::pair<std::uint64_t, std::uint64_t>& p) const {
        return rng::splitmix64(p.first ^ rng::splitmix64(p.second));
    }
};

using PairSet = std::unordered_set<std::pair<std::uint64_t, std::uint64_t>, PairHash>;

std::pair<std::uint64_t, std::uint64_t> canon(std::uint64_t a, std::uint64_t b) {
    return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}

std::string hash_hex(const std::string& canonical) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  (unsigned long long)rng::fnv1a(canonical));
    return buf;
}

// Full-batch gradient descent on standardized features; deterministic.
struct LogisticModel {
    std::vector<double> w, mean, scale;
    double b = 0.0;

    void fit(const std::vector<double>& x, const std::vector<std::uint8_t>& y,
             std::size_t dim) {
        const std::size_t rows = y.size();
        mean.assign(dim, 0.0);
        scale.assign(dim, 0.0);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t d = 0; d < dim; ++d) mean[d] += x[r * dim + d];
        for (double& m : mean) m /= double(rows);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t d = 0; d < dim; ++d) {
                double c = x[r * dim + d] - mean[d];
                scale[d] += c * c;
            }
        for (double& s : scale) {
            s = std::sqrt(s / double(rows));
            if (s == 0.0) s = 1.0;
        }

        w.assign(dim, 0.0);
        b = 0.0;
        std::vector<double> gw(dim);
        const double lr = 0.5;
        for (int iter = 0; iter < 300; ++iter) {
            std::fill(gw.begin(), gw.end(), 0.0);
            double gb = 0.0;
            for (std::size_t r = 0; r < rows; ++r) {
                double z = b;
                for (std::size_t d = 0; d < dim; ++d)
                    z += w[d] * (x[r * dim + d] - mean[d]) / scale[d];
                double g = sigmoid(z) - double(y[r]);
                for (std::size_t d = 0; d < dim; ++d)
                    gw[d] += g * (x[r * dim + d] - mean[d]) / scale[d];
                gb += g;
            }
            for (std::size_t d = 0; d < dim; ++d) w[d] -= lr * gw[d] / double(rows);
            b -= lr * gb / double(rows);
        }
    }

    double score(const double* x, std::size_t dim) const {
        double z = b;
        for (std::size_t d = 0; d < dim; ++d) z += w[d] * (x[d] - mean[d]) / scale[d];
        return sigmoid(z);
    }
};

} // namespace

std::string EvalReport::to_json() const {
    json j;
    j["task"] = task;
    j["metrics"] = metrics;
    j["folds"] = folds;
    j["seed"] = seed;
    j["config_hash"] = config_hash;
    return j.dump(2);
}

double mann_whitney_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size() || scores.empty())
        throw DataError("AUC needs equally sized, non-empty scores and labels");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double rank_sum_pos = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * double(i + 1 + j); // 1-based average over the tie run
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]]) {
                rank_sum_pos += avg_rank;
                ++n_pos;
            }
        i = j;
    }
    const std::size_t n_neg = scores.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) throw DataError("AUC undefined for single-class labels");
    const double u = rank_sum_pos - 0.5 * double(n_pos) * double(n_pos + 1);
    return u / (double(n_pos) * double(n_neg));
}

EvalReport link_prediction(const EmbeddingSet& emb, const EventStream& train_stream,
                           const EventStream& test_stream, std::uint64_t seed) {
    if (emb.timesteps == 0 || emb.rows == 0) throw DataError("embeddings are empty");
    if (test_stream.edges.empty()) throw DataError("test stream is empty");

    std::unordered_map<std::uint64_t, NodeId> row_of;
    row_of.reserve(emb.labels.size());
    for (NodeId i = 0; i < emb.labels.size(); ++i) row_of[emb.labels[i]] = i;

    std::unordered_set<std::uint64_t> train_vocab;
    PairSet known;
    for (const auto& e : train_stream.edges) {
        const std::uint64_t a = train_stream.vocab[e.source];
        const std::uint64_t b = train_stream.vocab[e.target];
        train_vocab.insert(a);
        train_vocab.insert(b);
        known.insert(canon(a, b));
    }

    PairSet positives;
    for (const auto& e : test_stream.edges) {
        const std::uint64_t a = test_stream.vocab[e.source];
        const std::uint64_t b = test_stream.vocab[e.target];
        known.insert(canon(a, b));
        if (a == b) continue;
        if (!train_vocab.count(a) || !train_vocab.count(b)) continue;
        if (!row_of.count(a) || !row_of.count(b)) continue;
        positives.insert(canon(a, b));
    }
    if (positives.empty())
        throw DataError("no eligible positive pairs: no test edge has both endpoints "
                        "in the training vocabulary");

    std::vector<std::uint64_t> eligible;
    for (std::uint64_t label : train_vocab)
        if (row_of.count(label)) eligible.push_back(label);
    std::sort(eligible.begin(), eligible.end());
    if (eligible.size() < 2) throw DataError("training vocabulary too small to sample non-edges");

    auto eng = rng::engine(rng::derive(seed, "lp-neg"));
    std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
    PairSet negatives;
    const std::size_t need = positives.size();
    std::size_t attempts = 0;
    const std::size_t max_attempts = 1000 * (need + 10);
    while (negatives.size() < need) {
        if (++attempts > max_attempts)
            throw DataError("could not sample enough non-edges: graph too dense");
        const std::uint64_t a = eligible[pick(eng)];
        const std::uint64_t b = eligible[pick(eng)];
        if (a == b) continue;
        auto p = canon(a, b);
        if (known.count(p) || negatives.count(p)) continue;
        negatives.insert(p);
    }

    // deterministic example order: sorted positives then sorted negatives
    std::vector<std::pair<std::uint64_t, std::uint64_t>> pairs(positives.begin(),
                                                               positives.end());
    std::sort(pairs.begin(), pairs.end());
    const std::size_t n_pos = pairs.size();
    {
        std::vector<std::pair<std::uint64_t, std::uint64_t>> negs(negatives.begin(),
                                                                  negatives.end());
        std::sort(negs.begin(), negs.end());
        pairs.insert(pairs.end(), negs.begin(), negs.end());
    }

    const std::size_t dim = emb.dim + 1;
    const std::size_t last_t = emb.timesteps - 1;
    std::vector<double> x(pairs.size() * dim);
    std::vector<std::uint8_t> y(pairs.size(), 0);
    for (std::size_t r = 0; r < pairs.size(); ++r) {
        const auto yu = emb.row(last_t, row_of.at(pairs[r].first));
        const auto yv = emb.row(last_t, row_of.at(pairs[r].second));
        double sq = 0.0;
        for (std::size_t d = 0; d < emb.dim; ++d) {
            double c = yu[d] - yv[d];
            x[r * dim + d] = c * c;
            sq += c * c;
        }
        x[r * dim + emb.dim] = std::sqrt(sq);
        y[r] = r < n_pos ? 1 : 0;
    }

    constexpr std::size_t kFolds = 5;
    if (n_pos < kFolds || pairs.size() - n_pos < kFolds)
        throw DataError("need at least 5 positive and 5 negative pairs for 5-fold CV");

    std::vector<std::size_t> fold_of(pairs.size());
    {
        auto feng = rng::engine(rng::derive(seed, "lp-folds"));
        std::vector<std::size_t> pos_idx(n_pos), neg_idx(pairs.size() - n_pos);
        std::iota(pos_idx.begin(), pos_idx.end(), 0);
        std::iota(neg_idx.begin(), neg_idx.end(), n_pos);
        std::shuffle(pos_idx.begin(), pos_idx.end(), feng);
        std::shuffle(neg_idx.begin(), neg_idx.end(), feng);
        for (std::size_t j = 0; j < pos_idx.size(); ++j) fold_of[pos_idx[j]] = j % kFolds;
        for (std::size_t j = 0; j < neg_idx.size(); ++j) fold_of[neg_idx[j]] = j % kFolds;
    }

    EvalReport report;
    report.task = "link_prediction";
    report.seed = seed;
    for (std::size_t f = 0; f < kFolds; ++f) {
        std::vector<double> xt, xv_scores;
        std::vector<std::uint8_t> yt, yv;
        xt.reserve(x.size());
        for (std::size_t r = 0; r < pairs.size(); ++r) {
            if (fold_of[r] == f) continue;
            xt.insert(xt.end(), x.begin() + r * dim, x.begin() + (r + 1) * dim);
            yt.push_back(y[r]);
        }
        LogisticModel model;
        model.fit(xt, yt, dim);
        for (std::size_t r = 0; r < pairs.size(); ++r) {
            if (fold_of[r] != f) continue;
            xv_scores.push_back(model.score(&x[r * dim], dim));
            yv.push_back(y[r]);
        }
        report.folds.push_back(mann_whitney_auc(xv_scores, yv));
    }
    report.metrics["AUC"] =
        std::accumulate(report.folds.begin(), report.folds.end(), 0.0) / double(kFolds);

    std::ostringstream cfg;
    cfg << "link_prediction|dim=" << emb.dim << "|T=" << emb.timesteps << "|pos=" << n_pos
        << "|seed=" << seed;
    report.config_hash = hash_hex(cfg.str());
    return report;
}

ActivityRanking detect_evolving(const EmbeddingSet& emb,
                                const std::vector<std::vector<NodeId>>& presence) {
    const std::size_t T = emb.timesteps;
    if (T < 2) throw DataError("activity ranking needs at least 2 timesteps");
    if (!presence.empty() && presence.size() != T)
        throw DataError("presence table does not match the timestep count");

    const std::size_t rows = emb.rows;
    std::vector<std::vector<char>> present(T, std::vector<char>(rows, presence.empty()));
    if (!presence.empty())
        for (std::size_t t = 0; t < T; ++t)
            for (NodeId v : presence[t]) {
                if (v >= rows) throw DataError("presence table references an unknown row");
                present[t][v] = 1;
            }

    ActivityRanking r;
    r.transitions = T - 1;
    r.ranking.resize(T - 1);
    r.active_sets.resize(T - 1);
    r.displacement.assign(T - 1,
                          std::vector<double>(rows, std::numeric_limits<double>::quiet_NaN()));
    r.active_count.assign(rows, 0);
    r.total_displacement.assign(rows, 0.0);
    std::vector<char> ranked(rows, 0);

    for (std::size_t tr = 0; tr + 1 < T; ++tr) {
        auto& disp = r.displacement[tr];
        auto& eligible = r.ranking[tr];
        for (NodeId v = 0; v < rows; ++v) {
            if (!present[tr][v] || !present[tr + 1][v]) continue;
            const auto a = emb.row(tr, v);
            const auto b = emb.row(tr + 1, v);
            double sq = 0.0;
            for (std::size_t d = 0; d < emb.dim; ++d) {
                double c = b[d] - a[d];
                sq += c * c;
            }
            disp[v] = std::sqrt(sq);
            r.total_displacement[v] += disp[v];
            eligible.push_back(v);
            ranked[v] = 1;
        }
        std::sort(eligible.begin(), eligible.end(), [&](NodeId a, NodeId b) {
            if (disp[a] != disp[b]) return disp[a] > disp[b];
            return a < b;
        });
        const std::size_t k =
            std::size_t(std::ceil(0.10 * double(eligible.size())));
        r.active_sets[tr].assign(eligible.begin(), eligible.begin() + std::min(k, eligible.size()));
        for (NodeId v : r.active_sets[tr]) ++r.active_count[v];
    }

    for (NodeId v = 0; v < rows; ++v)
        if (ranked[v]) r.evolving_ranking.push_back(v);
    std::sort(r.evolving_ranking.begin(), r.evolving_ranking.end(), [&](NodeId a, NodeId b) {
        if (r.active_count[a] != r.active_count[b]) return r.active_count[a] > r.active_count[b];
        if (r.total_displacement[a] != r.total_displacement[b])
            return r.total_displacement[a] > r.total_displacement[b];
        return a < b;
    });
    return r;
}

EvalReport ranking_metrics(const std::vector<NodeId>& ranking,
                           const std::vector<NodeId>& ground_truth, std::size_t k) {
    if (ranking.empty()) throw DataError("empty ranking");
    if (ground_truth.empty()) throw DataError("empty ground truth");
    if (k == 0) k = ground_truth.size();

    std::unordered_set<NodeId> relevant(ground_truth.begin(), ground_truth.end());

    double ap_sum = 0.0;
    std::size_t hits = 0;
    double mrr_sum = 0.0;
    std::size_t topk_hits = 0;
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        if (!relevant.count(ranking[i])) continue;
        ++hits;
        ap_sum += double(hits) / double(i + 1);
        mrr_sum += 1.0 / double(i + 1);
        if (i < k) ++topk_hits;
    }

    EvalReport report;
    report.task = "evolving_detection";
    report.metrics["MAP"] = ap_sum / double(relevant.size());
    report.metrics["MRR"] = mrr_sum / double(relevant.size());
    report.metrics["TOPK"] = double(topk_hits) / double(k);

    std::ostringstream cfg;
    cfg << "evolving_detection|ranked=" << ranking.size() << "|gt=" << relevant.size()
        << "|k=" << k;
    report.config_hash = hash_hex(cfg.str());
    return report;
}

void export_trajectories(const EmbeddingSet& emb,
                         const std::vector<std::vector<NodeId>>& presence,
                         const std::vector<std::uint64_t>& nodes, std::ostream& out) {
    std::unordered_map<std::uint64_t, NodeId> row_of;
    for (NodeId i = 0; i < emb.labels.size(); ++i) row_of[emb.labels[i]] = i;

    std::vector<std::uint64_t> offenders;
    for (std::uint64_t label : nodes)
        if (!row_of.count(label)) offenders.push_back(label);
    if (!offenders.empty()) {
        std::ostringstream msg;
        msg << "unknown node id(s):";
        for (std::uint64_t label : offenders) msg << " " << label;
        throw DataError(msg.str());
    }

    const std::size_t T = emb.timesteps;
    ActivityRanking act;
    std::vector<std::vector<char>> active_flag;
    if (T >= 2) {
        act = detect_evolving(emb, presence);
        active_flag.assign(T - 1, std::vector<char>(emb.rows, 0));
        for (std::size_t tr = 0; tr + 1 < T; ++tr)
            for (NodeId v : act.active_sets[tr]) active_flag[tr][v] = 1;
    }

    out << "node,t";
    for (std::size_t d = 1; d <= emb.dim; ++d) out << ",dim_" << d;
    out << ",displacement,active\n";

    char buf[32];
    for (std::uint64_t label : nodes) {
        const NodeId v = row_of.at(label);
        for (std::size_t t = 0; t < T; ++t) {
            out << label << "," << (t + 1);
            const auto y = emb.row(t, v);
            for (std::size_t d = 0; d < emb.dim; ++d) {
                std::snprintf(buf, sizeof buf, "%.17g", y[d]);
                out << "," << buf;
            }
            if (t + 1 < T && std::isfinite(act.displacement[t][v])) {
                std::snprintf(buf, sizeof buf, "%.17g", act.displacement[t][v]);
                out << "," << buf << "," << int(active_flag[t][v]);
            } else {
                out << ",,";
            }
            out << "\n";
        }
    }
}

} // namespace dynembed
