#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "dynembed/errors.hpp"
#include "dynembed/eval.hpp"
#include "dynembed/temporal_graph.hpp"

using namespace dynembed;

namespace {

EventStream stream_of(const std::string& text) {
    std::istringstream in(text);
    return ingest_edge_list(in, {});
}

EmbeddingSet make_embeddings(std::size_t rows, std::size_t timesteps, std::size_t dim) {
    EmbeddingSet emb;
    emb.rows = rows;
    emb.timesteps = timesteps;
    emb.dim = dim;
    emb.m.assign(timesteps, std::vector<double>(rows * dim, 0.0));
    emb.alpha.assign(rows * dim, 0.0);
    emb.labels.resize(rows);
    std::iota(emb.labels.begin(), emb.labels.end(), 0);
    return emb;
}

std::vector<std::string> split_csv_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

std::vector<std::string> fields_of(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace

TEST_CASE("rank AUC separates, inverts and averages ties") {
    std::vector<double> scores{1, 2, 3, 4};
    std::vector<std::uint8_t> up{0, 0, 1, 1}, down{1, 1, 0, 0};
    CHECK(mann_whitney_auc(scores, up) == doctest::Approx(1.0));
    CHECK(mann_whitney_auc(scores, down) == doctest::Approx(0.0));

    std::vector<double> flat{5, 5, 5, 5};
    CHECK(mann_whitney_auc(flat, up) == doctest::Approx(0.5));

    // one tied pair counts half: pairs (1,1) tie, (2,1) win -> 1.5/2
    std::vector<double> tied{1, 1, 2};
    std::vector<std::uint8_t> lab{0, 1, 1};
    CHECK(mann_whitney_auc(tied, lab) == doctest::Approx(0.75));
}

TEST_CASE("rank AUC is invariant under strictly monotone transforms") {
    std::mt19937_64 eng(3);
    std::uniform_real_distribution<double> u(-2, 2);
    std::vector<double> scores(40);
    std::vector<std::uint8_t> labels(40);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        scores[i] = u(eng);
        labels[i] = (eng() & 1) != 0;
    }
    labels[0] = 0;
    labels[1] = 1;
    double base = mann_whitney_auc(scores, labels);
    std::vector<double> scaled(scores), exped(scores);
    for (auto& v : scaled) v = 3 * v + 7;
    for (auto& v : exped) v = std::exp(v);
    CHECK(mann_whitney_auc(scaled, labels) == doctest::Approx(base));
    CHECK(mann_whitney_auc(exped, labels) == doctest::Approx(base));
}

TEST_CASE("rank AUC rejects degenerate inputs") {
    std::vector<double> scores{1, 2};
    std::vector<std::uint8_t> ones{1, 1}, zeros{0, 0}, short_lab{1};
    CHECK_THROWS_AS(mann_whitney_auc(scores, ones), DataError);
    CHECK_THROWS_AS(mann_whitney_auc(scores, zeros), DataError);
    CHECK_THROWS_AS(mann_whitney_auc(scores, short_lab), DataError);
    CHECK_THROWS_AS(mann_whitney_auc({}, {}), DataError);
}

TEST_CASE("ranking metric hand values") {
    // perfect ranking
    auto perfect = ranking_metrics({1, 2, 3, 4}, {1, 2});
    CHECK(perfect.metrics.at("MAP") == doctest::Approx(1.0));
    CHECK(perfect.metrics.at("TOPK") == doctest::Approx(1.0));

    // single relevant item at rank 4
    auto rank4 = ranking_metrics({7, 8, 9, 5}, {5});
    CHECK(rank4.metrics.at("MRR") == doctest::Approx(0.25));

    // ground truth {a,b}, ranking [a,x,b,y]: AP = (1 + 2/3)/2
    auto mixed = ranking_metrics({10, 20, 11, 30}, {10, 11});
    CHECK(mixed.metrics.at("MAP") == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0).epsilon(1e-6));
    CHECK(mixed.metrics.at("MAP") == doctest::Approx(0.8333).epsilon(1e-3));

    // explicit k
    auto k1 = ranking_metrics({10, 20, 11, 30}, {10, 11}, 1);
    CHECK(k1.metrics.at("TOPK") == doctest::Approx(1.0));
    auto k4 = ranking_metrics({10, 20, 11, 30}, {10, 11}, 4);
    CHECK(k4.metrics.at("TOPK") == doctest::Approx(0.5));

    CHECK(perfect.task == "evolving_detection");
    CHECK_THROWS_AS(ranking_metrics({}, {1}), DataError);
    CHECK_THROWS_AS(ranking_metrics({1}, {}), DataError);
}

TEST_CASE("ranking metrics agree with a brute-force oracle on every small ranking") {
    for (std::size_t n = 1; n <= 6; ++n) {
        std::vector<NodeId> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        do {
            for (std::size_t mask = 1; mask < (std::size_t(1) << n); ++mask) {
                std::vector<NodeId> gt;
                for (std::size_t b = 0; b < n; ++b)
                    if (mask & (std::size_t(1) << b)) gt.push_back(NodeId(b));
                const std::size_t g = gt.size();

                // direct translation of the definitions
                std::set<NodeId> rel(gt.begin(), gt.end());
                double ap = 0, mrr = 0;
                std::size_t seen = 0, top_hits = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (rel.count(perm[i])) {
                        ++seen;
                        ap += double(seen) / double(i + 1);
                        mrr += 1.0 / double(i + 1);
                        if (i < g) ++top_hits;
                    }
                }
                ap /= double(g);
                mrr /= double(g);
                const double topk = double(top_hits) / double(g);

                auto rep = ranking_metrics(perm, gt);
                CHECK(rep.metrics.at("MAP") == doctest::Approx(ap).epsilon(1e-12));
                CHECK(rep.metrics.at("MRR") == doctest::Approx(mrr).epsilon(1e-12));
                CHECK(rep.metrics.at("TOPK") == doctest::Approx(topk).epsilon(1e-12));

                // saturation happens exactly when the ground truth fills the
                // top-|GT| ranks; for MRR the ceiling is H_g / g
                const bool tops = top_hits == g;
                double h_g = 0;
                for (std::size_t i = 1; i <= g; ++i) h_g += 1.0 / double(i);
                CHECK((std::abs(rep.metrics.at("MAP") - 1.0) < 1e-9) == tops);
                CHECK((std::abs(rep.metrics.at("TOPK") - 1.0) < 1e-9) == tops);
                CHECK((std::abs(rep.metrics.at("MRR") - h_g / double(g)) < 1e-9) == tops);
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
    }
}

TEST_CASE("link prediction reaches AUC 1 on separable geometry") {
    // six well-separated clusters of two co-located nodes each
    EmbeddingSet emb = make_embeddings(12, 1, 2);
    for (NodeId g = 0; g < 12; ++g) {
        emb.m[0][g * 2 + 0] = 10.0 * double(g / 2);
        emb.m[0][g * 2 + 1] = 0.0;
    }
    std::ostringstream train;
    for (int i = 0; i + 2 < 12; ++i) train << i << " " << (i + 2) << " " << i << "\n";
    std::ostringstream test;
    for (int i = 0; i < 12; i += 2) test << i << " " << (i + 1) << " " << (100 + i) << "\n";
    auto report = link_prediction(emb, stream_of(train.str()), stream_of(test.str()), 5);
    CHECK(report.task == "link_prediction");
    CHECK(report.metrics.at("AUC") == doctest::Approx(1.0));
    CHECK(report.folds.size() == 5);
    for (double f : report.folds) CHECK(f == doctest::Approx(1.0));
    CHECK_FALSE(report.config_hash.empty());
}

TEST_CASE("link prediction sits at chance level on random geometry") {
    double total = 0;
    const int reps = 10;
    for (int rep = 0; rep < reps; ++rep) {
        std::mt19937_64 eng(100 + rep);
        const std::size_t n = 60;
        EmbeddingSet emb = make_embeddings(n, 1, 8);
        std::normal_distribution<double> norm(0.0, 1.0);
        for (auto& v : emb.m[0]) v = norm(eng);

        std::ostringstream train;
        for (std::size_t i = 0; i < n; ++i)
            train << i << " " << (i + 1) % n << " " << i << "\n";
        std::set<std::pair<int, int>> test_pairs;
        std::uniform_int_distribution<int> pick(0, int(n) - 1);
        while (test_pairs.size() < 100) {
            int u = pick(eng), v = pick(eng);
            if (u == v) continue;
            test_pairs.insert({std::min(u, v), std::max(u, v)});
        }
        std::ostringstream test;
        int ts = 1000;
        for (auto [u, v] : test_pairs) test << u << " " << v << " " << ts++ << "\n";
        auto report = link_prediction(emb, stream_of(train.str()), stream_of(test.str()),
                                      900 + rep);
        total += report.metrics.at("AUC");
    }
    CHECK(total / reps == doctest::Approx(0.5).epsilon(0.06)); // 0.5 +- 0.03
}

TEST_CASE("link prediction rejects undersized or ineligible inputs") {
    EmbeddingSet emb = make_embeddings(12, 1, 2);
    auto train = stream_of("0 1 0\n1 2 1\n2 3 2\n");
    auto tiny = stream_of("0 1 100\n1 2 101\n2 3 102\n");
    CHECK_THROWS_AS(link_prediction(emb, train, tiny, 1), DataError); // < 5 positives

    auto foreign = stream_of("50 51 100\n52 53 101\n"); // endpoints unseen in training
    CHECK_THROWS_AS(link_prediction(emb, train, foreign, 1), DataError);

    EventStream empty;
    CHECK_THROWS_AS(link_prediction(emb, train, empty, 1), DataError);
}

TEST_CASE("zero motion yields zero displacement and id-ordered ranking") {
    EmbeddingSet emb = make_embeddings(7, 3, 3);
    std::mt19937_64 eng(17);
    std::normal_distribution<double> norm(0.0, 1.0);
    for (auto& v : emb.m[0]) v = norm(eng);
    emb.m[1] = emb.m[0];
    emb.m[2] = emb.m[0];
    auto act = detect_evolving(emb, {});
    REQUIRE(act.transitions == 2);
    std::vector<NodeId> ids{0, 1, 2, 3, 4, 5, 6};
    for (std::size_t tr = 0; tr < 2; ++tr) {
        CHECK(act.ranking[tr] == ids);
        CHECK(act.active_sets[tr].size() == 1); // ceil(0.1 * 7)
        for (NodeId g = 0; g < 7; ++g) CHECK(act.displacement[tr][g] == doctest::Approx(0.0));
    }
    CHECK(act.evolving_ranking == ids);
}

TEST_CASE("a single moving node dominates every ranking") {
    EmbeddingSet emb = make_embeddings(10, 4, 2);
    std::mt19937_64 eng(19);
    std::normal_distribution<double> norm(0.0, 1.0);
    for (auto& v : emb.m[0]) v = norm(eng);
    for (std::size_t t = 1; t < 4; ++t) {
        emb.m[t] = emb.m[t - 1];
        emb.m[t][3 * 2 + 0] += 10.0; // node 3 drifts along dim 1
    }
    auto act = detect_evolving(emb, {});
    REQUIRE(act.transitions == 3);
    for (std::size_t tr = 0; tr < 3; ++tr) {
        CHECK(act.ranking[tr][0] == 3);
        REQUIRE(act.active_sets[tr].size() == 1);
        CHECK(act.active_sets[tr][0] == 3);
        CHECK(act.displacement[tr][3] == doctest::Approx(10.0));
    }
    CHECK(act.evolving_ranking[0] == 3);
    CHECK(act.active_count[3] == 3);
    CHECK(act.total_displacement[3] == doctest::Approx(30.0));
}

TEST_CASE("rankings are invariant under a global orthogonal transform") {
    EmbeddingSet emb = make_embeddings(8, 3, 4);
    std::mt19937_64 eng(23);
    std::normal_distribution<double> norm(0.0, 1.0);
    for (auto& mat : emb.m)
        for (auto& v : mat) v = norm(eng);

    // signed permutation of coordinates: orthogonal, applied to every M_t
    const std::size_t perm[4] = {2, 0, 3, 1};
    const double sign[4] = {1, -1, 1, -1};
    EmbeddingSet rot = emb;
    for (std::size_t t = 0; t < 3; ++t)
        for (NodeId g = 0; g < 8; ++g)
            for (std::size_t d = 0; d < 4; ++d)
                rot.m[t][g * 4 + perm[d]] = sign[d] * emb.m[t][g * 4 + d];

    auto a = detect_evolving(emb, {});
    auto b = detect_evolving(rot, {});
    CHECK(a.ranking == b.ranking);
    CHECK(a.evolving_ranking == b.evolving_ranking);
    CHECK(a.active_sets == b.active_sets);
    for (std::size_t tr = 0; tr < a.transitions; ++tr)
        for (NodeId g = 0; g < 8; ++g)
            CHECK(a.displacement[tr][g] == doctest::Approx(b.displacement[tr][g]));
}

TEST_CASE("absent nodes drop out of the affected transitions") {
    EmbeddingSet emb = make_embeddings(5, 3, 2);
    std::mt19937_64 eng(29);
    std::normal_distribution<double> norm(0.0, 1.0);
    for (auto& mat : emb.m)
        for (auto& v : mat) v = norm(eng);
    emb.m[1][4 * 2] += 100.0; // node 4 would dominate if eligible

    std::vector<std::vector<NodeId>> presence{{0, 1, 2, 3, 4}, {0, 1, 2, 3}, {0, 1, 2, 3, 4}};
    auto act = detect_evolving(emb, presence);
    for (std::size_t tr = 0; tr < 2; ++tr) {
        CHECK(act.ranking[tr].size() == 4);
        for (NodeId g : act.ranking[tr]) CHECK(g != 4);
        CHECK(std::isnan(act.displacement[tr][4]));
        CHECK(act.active_sets[tr].size() == 1); // ceil(0.1 * 4)
    }
    CHECK(act.evolving_ranking.size() == 4);

    CHECK_THROWS_AS(detect_evolving(make_embeddings(3, 1, 2), {}), DataError);
    CHECK_THROWS_AS(detect_evolving(emb, {{0}, {0}}), DataError); // wrong table size
}

TEST_CASE("trajectory export emits T rows per node with forward displacements") {
    EmbeddingSet emb = make_embeddings(3, 3, 2);
    emb.labels = {5, 9, 12};
    // node 5 constant; node 9 moves 3 then 4; node 12 noise
    for (std::size_t t = 0; t < 3; ++t) {
        emb.m[t][0 * 2 + 0] = 1.0;
        emb.m[t][2 * 2 + 0] = double(t) * 0.1;
    }
    emb.m[1][1 * 2 + 0] = 3.0;
    emb.m[2][1 * 2 + 0] = 3.0;
    emb.m[2][1 * 2 + 1] = 4.0;

    std::ostringstream out;
    export_trajectories(emb, {}, {5, 9}, out);
    auto lines = split_csv_lines(out.str());
    REQUIRE(lines.size() == 1 + 2 * 3);
    CHECK(lines[0] == "node,t,dim_1,dim_2,displacement,active");

    // per node: rows t=1..3, displacement filled on the first two only
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto f = fields_of(lines[i]);
        REQUIRE(f.size() == 6);
        const std::size_t t = std::stoul(f[1]);
        CHECK(f[0] == (i <= 3 ? "5" : "9"));
        CHECK(t == ((i - 1) % 3) + 1);
        if (t < 3) {
            CHECK_FALSE(f[4].empty());
            CHECK_FALSE(f[5].empty());
        } else {
            CHECK(f[4].empty());
            CHECK(f[5].empty());
        }
    }
    CHECK(std::stod(fields_of(lines[1])[4]) == doctest::Approx(0.0)); // constant node
    CHECK(std::stod(fields_of(lines[4])[4]) == doctest::Approx(3.0)); // t1 -> t2
    CHECK(std::stod(fields_of(lines[5])[4]) == doctest::Approx(4.0)); // t2 -> t3

    std::ostringstream sink;
    CHECK_THROWS_WITH_AS(export_trajectories(emb, {}, {5, 77, 88}, sink),
                         doctest::Contains("77"), DataError);
}
