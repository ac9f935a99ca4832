#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "dynembed/dbe.hpp"
#include "dynembed/errors.hpp"
#include "dynembed/eval.hpp"
#include "dynembed/rng.hpp"
#include "dynembed/synth.hpp"
#include "dynembed/temporal_graph.hpp"
#include "dynembed/walks.hpp"

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

unsigned env_workers() {
    const char* v = std::getenv("DYNEMBED_WORKERS");
    if (!v || !*v) return 1;
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (end == v || *end != '\0' || n < 0)
        throw dynembed::DataError("DYNEMBED_WORKERS must be a non-negative integer");
    return unsigned(n);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = s.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(s.substr(start));
            break;
        }
        out.push_back(s.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

// Sweep values arrive as strings; a malformed value is a usage error.
template <typename T>
T parse_value(const std::string& s, const char* flag) {
    T v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw CLI::ValidationError(flag, "'" + s + "' is not a valid value");
    return v;
}

template <>
double parse_value<double>(const std::string& s, const char* flag) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw CLI::ValidationError(flag, "'" + s + "' is not a number");
    }
}

void write_run_manifest(const std::string& dir, const json& j) {
    fs::create_directories(dir);
    std::ofstream out(fs::path(dir) / "run_config.json");
    if (!out) throw dynembed::DataError("cannot write run_config.json in " + dir);
    out << j.dump(2) << "\n";
}

void emit_report(const dynembed::EvalReport& report, const std::string& out_path) {
    const std::string text = report.to_json();
    std::cout << text << "\n";
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw dynembed::DataError("cannot write report to " + out_path);
        out << text << "\n";
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"dynamic network embedding pipeline"};
    app.require_subcommand(1);

    // construct
    auto* construct = app.add_subcommand("construct", "slice a temporal edge list into snapshots");
    std::string c_input, c_out, c_schema = "sdt", c_window, c_events, c_stride;
    double c_fraction = 1.0;
    construct->add_option("--input,-i", c_input, "temporal edge list")->required();
    construct->add_option("--out,-o", c_out, "output directory")->required();
    construct->add_option("--schema", c_schema, "column schema (default sdt)");
    construct->add_option("--window,-w", c_window, "time window (omega); accepts a,b,c sweeps");
    construct->add_option("--events", c_events, "events per window (epsilon); accepts sweeps");
    construct->add_option("--stride", c_stride, "stride (delta); accepts sweeps");
    construct->add_option("--train-fraction", c_fraction,
                          "keep only the first fraction of edges (time split)");

    // walk
    auto* walk = app.add_subcommand("walk", "generate random-walk corpora from snapshots");
    std::string w_in, w_out;
    std::size_t w_r = 10, w_len = 80;
    std::uint64_t w_seed = 1;
    walk->add_option("--in", w_in, "snapshot directory")->required();
    walk->add_option("--out,-o", w_out, "output directory")->required();
    walk->add_option("--walks,-r", w_r, "walks per node (default 10)");
    walk->add_option("--walk-len,-l", w_len, "walk length (default 80)");
    walk->add_option("--seed", w_seed, "rng seed");

    // train
    auto* train_cmd = app.add_subcommand("train", "train dynamic embeddings from snapshots");
    std::string t_in, t_out, t_pretrained;
    std::string t_dim = "128", t_lambda1 = "1", t_lambda = "1000", t_seed = "1";
    std::size_t t_r = 10, t_len = 80, t_context = 4, t_negatives = 10, t_epochs = 5;
    double t_lr = 0.025, t_min_lr = 1e-4;
    bool t_no_trace = false;
    train_cmd->add_option("--in", t_in, "snapshot directory")->required();
    train_cmd->add_option("--out,-o", t_out, "output directory")->required();
    train_cmd->add_option("--dim,-d", t_dim, "embedding dimension D; accepts a,b,c sweeps");
    train_cmd->add_option("--walks,-r", t_r, "walks per node r (default 10)");
    train_cmd->add_option("--walk-len,-l", t_len, "walk length L (default 80)");
    train_cmd->add_option("--context", t_context, "context size cs (default 4)");
    train_cmd->add_option("--negatives", t_negatives, "negative samples ns (default 10)");
    train_cmd->add_option("--lambda1", t_lambda1, "prior precision; accepts sweeps");
    train_cmd->add_option("--lambda", t_lambda, "drift precision; accepts sweeps");
    train_cmd->add_option("--lr", t_lr, "initial learning rate");
    train_cmd->add_option("--min-lr", t_min_lr, "final learning rate");
    train_cmd->add_option("--epochs", t_epochs, "training epochs");
    train_cmd->add_option("--seed", t_seed, "rng seed; accepts sweeps");
    train_cmd->add_option("--pretrained", t_pretrained, "embedding directory to initialize from");
    train_cmd->add_flag("--no-trace", t_no_trace, "skip the per-epoch objective trace");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate trained embeddings");
    eval_cmd->require_subcommand(1);
    auto* eval_link = eval_cmd->add_subcommand("link", "time-ordered link prediction AUC");
    std::string el_emb, el_input, el_schema = "sdt", el_out;
    double el_fraction = 0.75;
    std::uint64_t el_seed = 1;
    eval_link->add_option("--emb", el_emb, "embedding directory")->required();
    eval_link->add_option("--input,-i", el_input, "temporal edge list")->required();
    eval_link->add_option("--schema", el_schema, "column schema");
    eval_link->add_option("--train-fraction", el_fraction, "time split fraction (default 0.75)");
    eval_link->add_option("--seed", el_seed, "rng seed");
    eval_link->add_option("--out,-o", el_out, "also write the JSON report here");

    auto* eval_evolving = eval_cmd->add_subcommand("evolving", "evolving-node detection metrics");
    std::string ee_emb, ee_truth, ee_out;
    std::size_t ee_k = 0;
    eval_evolving->add_option("--emb", ee_emb, "embedding directory")->required();
    eval_evolving->add_option("--truth", ee_truth, "ground truth file")->required();
    eval_evolving->add_option("--k", ee_k, "TOP-K cutoff (default: ground truth size)");
    eval_evolving->add_option("--out,-o", ee_out, "also write the JSON report here");

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "generate a labeled synthetic network");
    dynembed::SynthConfig sc;
    std::string s_out;
    synth_cmd->add_option("--n", sc.n, "node count (default 500)");
    synth_cmd->add_option("--alpha", sc.alpha_pl, "power-law exponent (default 2)");
    synth_cmd->add_option("--c", sc.c, "power-law scale (default 100)");
    synth_cmd->add_option("--communities", sc.communities, "community count (default 4)");
    synth_cmd->add_option("--evolving-fraction", sc.evolving_fraction,
                          "evolving node fraction (default 0.1)");
    synth_cmd->add_option("--timesteps,-T", sc.timesteps, "timesteps (default 10)");
    synth_cmd->add_option("--intra-ratio", sc.intra_ratio, "intra-community stub ratio");
    synth_cmd->add_option("--rewire-prob", sc.stable_rewire_prob, "stable rewire probability");
    synth_cmd->add_option("--seed", sc.seed, "rng seed");
    synth_cmd->add_option("--out,-o", s_out, "output directory")->required();

    // export
    auto* export_cmd = app.add_subcommand("export", "dump node trajectories as CSV");
    std::string x_emb, x_nodes, x_out;
    export_cmd->add_option("--emb", x_emb, "embedding directory")->required();
    export_cmd->add_option("--nodes", x_nodes, "comma-separated node ids")->required();
    export_cmd->add_option("--out,-o", x_out, "CSV path (default: stdout)");

    construct->callback([&] {
        const bool by_time = !c_window.empty();
        const bool by_events = !c_events.empty();
        if (by_time == by_events)
            throw CLI::ValidationError("construct", "pass exactly one of --window / --events");
        if (c_stride.empty()) throw CLI::ValidationError("construct", "--stride is required");
        if (c_fraction <= 0.0 || c_fraction > 1.0)
            throw CLI::ValidationError("construct", "--train-fraction must lie in (0, 1]");

        dynembed::EventStream stream =
            dynembed::ingest_edge_list(c_input, dynembed::IngestOptions{c_schema});
        if (c_fraction < 1.0) stream = dynembed::time_split(stream, c_fraction).first;

        const auto windows = split_list(by_time ? c_window : c_events);
        const auto strides = split_list(c_stride);
        const bool single = windows.size() == 1 && strides.size() == 1;
        for (const auto& w : windows) {
            for (const auto& s : strides) {
                dynembed::DynamicNetwork net;
                std::string dir = c_out;
                if (by_time) {
                    net = dynembed::build_by_time(stream, parse_value<double>(w, "--window"),
                                                  parse_value<double>(s, "--stride"));
                    if (!single) dir = (fs::path(c_out) / ("w" + w + "_dt" + s)).string();
                } else {
                    net = dynembed::build_by_events(stream,
                                                    parse_value<std::size_t>(w, "--events"),
                                                    parse_value<std::size_t>(s, "--stride"));
                    if (!single) dir = (fs::path(c_out) / ("e" + w + "_de" + s)).string();
                }
                dynembed::dump_snapshots(net, dir);
                write_run_manifest(dir, {{"command", "construct"},
                                         {"input", c_input},
                                         {"schema", c_schema},
                                         {"strategy", by_time ? "time" : "events"},
                                         {"window", w},
                                         {"stride", s},
                                         {"train_fraction", c_fraction}});
                std::cout << "wrote " << net.timestep_count() << " snapshots (gamma="
                          << net.construction.gamma << ") to " << dir << "\n";
            }
        }
    });

    walk->callback([&] {
        const auto net = dynembed::load_snapshots(w_in);
        const auto corpus = dynembed::random_walks(net, w_r, w_len, w_seed, env_workers());
        dynembed::dump_walks(corpus, w_out);
        write_run_manifest(w_out, {{"command", "walk"},
                                   {"in", w_in},
                                   {"walks", w_r},
                                   {"walk_len", w_len},
                                   {"seed", w_seed}});
        std::size_t total = 0;
        for (const auto& ws : corpus) total += ws.num_walks();
        std::cout << "wrote " << total << " walks over " << corpus.size() << " timesteps to "
                  << w_out << "\n";
    });

    train_cmd->callback([&] {
        std::cout << "defaults: D=128 L=80 r=10 cs=4 ns=10\n";
        const auto net = dynembed::load_snapshots(t_in);
        const unsigned workers = env_workers();

        const auto dims = split_list(t_dim);
        const auto l1s = split_list(t_lambda1);
        const auto ls = split_list(t_lambda);
        const auto seeds = split_list(t_seed);
        const bool single =
            dims.size() == 1 && l1s.size() == 1 && ls.size() == 1 && seeds.size() == 1;

        for (const auto& d : dims)
            for (const auto& l1 : l1s)
                for (const auto& l : ls)
                    for (const auto& sd : seeds) {
                        dynembed::TrainConfig cfg;
                        cfg.dim = parse_value<std::size_t>(d, "--dim");
                        cfg.context = t_context;
                        cfg.negatives = t_negatives;
                        cfg.lambda1 = parse_value<double>(l1, "--lambda1");
                        cfg.lambda = parse_value<double>(l, "--lambda");
                        cfg.learning_rate = t_lr;
                        cfg.min_learning_rate = t_min_lr;
                        cfg.epochs = t_epochs;
                        cfg.seed = parse_value<std::uint64_t>(sd, "--seed");
                        cfg.workers = workers;
                        cfg.track_objective = !t_no_trace;
                        cfg.pretrained_dir = t_pretrained;

                        const auto corpus =
                            dynembed::random_walks(net, t_r, t_len, cfg.seed, workers);
                        const auto result = dynembed::train(net, corpus, cfg);

                        std::string dir = t_out;
                        if (!single)
                            dir = (fs::path(t_out) /
                                   ("dim" + d + "_l1" + l1 + "_l" + l + "_seed" + sd))
                                      .string();
                        dynembed::save_embeddings(dir, result, cfg);
                        write_run_manifest(dir, {{"command", "train"},
                                                 {"in", t_in},
                                                 {"walks", t_r},
                                                 {"walk_len", t_len},
                                                 {"workers", workers},
                                                 {"trace", !t_no_trace}});
                        std::cout << "trained dim=" << d << " lambda1=" << l1 << " lambda=" << l
                                  << " seed=" << sd << " -> " << dir;
                        if (!result.objective_trace.empty())
                            std::cout << " (objective " << result.objective_trace.back() << ")";
                        std::cout << "\n";
                    }
    });

    eval_link->callback([&] {
        if (el_fraction <= 0.0 || el_fraction >= 1.0)
            throw CLI::ValidationError("eval link", "--train-fraction must lie in (0, 1)");
        const auto bundle = dynembed::load_embeddings(el_emb);
        const auto stream =
            dynembed::ingest_edge_list(el_input, dynembed::IngestOptions{el_schema});
        const auto [train_stream, test_stream] = dynembed::time_split(stream, el_fraction);
        const auto report =
            dynembed::link_prediction(bundle.embeddings, train_stream, test_stream, el_seed);
        emit_report(report, el_out);
    });

    eval_evolving->callback([&] {
        const auto bundle = dynembed::load_embeddings(ee_emb);
        const auto truth = dynembed::load_ground_truth(ee_truth);

        std::unordered_map<std::uint64_t, dynembed::NodeId> row_of;
        for (dynembed::NodeId i = 0; i < bundle.embeddings.labels.size(); ++i)
            row_of[bundle.embeddings.labels[i]] = i;
        std::vector<dynembed::NodeId> gt;
        for (std::uint64_t label : truth.evolving) {
            auto it = row_of.find(label);
            if (it == row_of.end())
                throw dynembed::DataError("ground truth node " + std::to_string(label) +
                                          " is not in the embedding vocabulary");
            gt.push_back(it->second);
        }
        const auto ranking = dynembed::detect_evolving(bundle.embeddings, bundle.presence);
        auto report = dynembed::ranking_metrics(ranking.evolving_ranking, gt, ee_k);
        emit_report(report, ee_out);
    });

    synth_cmd->callback([&] {
        const auto net = dynembed::generate(sc);
        dynembed::dump_synth(net, sc, s_out);
        write_run_manifest(s_out, {{"command", "synth"},
                                   {"n", sc.n},
                                   {"alpha", sc.alpha_pl},
                                   {"c", sc.c},
                                   {"timesteps", sc.timesteps},
                                   {"seed", sc.seed}});
        std::cout << "generated " << sc.timesteps << " timesteps, "
                  << net.evolving_nodes.size() << " evolving nodes -> " << s_out << "\n";
    });

    export_cmd->callback([&] {
        const auto bundle = dynembed::load_embeddings(x_emb);
        std::vector<std::uint64_t> labels;
        for (const auto& tok : split_list(x_nodes))
            labels.push_back(parse_value<std::uint64_t>(tok, "--nodes"));
        if (x_out.empty()) {
            dynembed::export_trajectories(bundle.embeddings, bundle.presence, labels, std::cout);
        } else {
            std::ofstream out(x_out);
            if (!out) throw dynembed::DataError("cannot write " + x_out);
            dynembed::export_trajectories(bundle.embeddings, bundle.presence, labels, out);
            std::cout << "wrote trajectories to " << x_out << "\n";
        }
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const dynembed::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const dynembed::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const dynembed::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
