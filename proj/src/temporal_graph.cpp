#include "dynembed/temporal_graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>
#include <unordered_map>

#include "dynembed/errors.hpp"

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace dynembed {

bool Snapshot::has_edge(NodeId u, NodeId v) const {
    if (u >= adjacency.size()) return false;
    const auto& row = adjacency[u];
    return std::any_of(row.begin(), row.end(),
                       [v](const auto& e) { return e.first == v; });
}

std::size_t Snapshot::edge_count() const {
    std::size_t half = 0;
    for (const auto& row : adjacency) half += row.size();
    return half / 2;
}

std::vector<NodeId> DynamicNetwork::active_vocabulary() const {
    std::vector<char> seen(vocab.size(), 0);
    for (const auto& snap : snapshots)
        for (NodeId v : snap.nodes) seen[v] = 1;
    std::vector<NodeId> out;
    for (NodeId v = 0; v < seen.size(); ++v)
        if (seen[v]) out.push_back(v);
    return out;
}

namespace {

struct RawEdge {
    std::uint64_t source;
    std::uint64_t target;
    double timestamp;
    double weight;
};

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == ','))
            ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != ',')
            ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& what) {
    throw ParseError("line " + std::to_string(line_no) + ": " + what);
}

void validate_schema(const std::string& schema) {
    if (schema.size() != 3 && schema.size() != 4)
        throw DataError("schema must name 3 or 4 columns, got \"" + schema + "\"");
    std::string sorted = schema;
    std::sort(sorted.begin(), sorted.end());
    if ((schema.size() == 3 && sorted != "dst") ||
        (schema.size() == 4 && sorted != "dstw"))
        throw DataError("schema must be a permutation of s,d,t[,w], got \"" + schema + "\"");
}

} // namespace

EventStream ingest_edge_list(std::istream& in, const IngestOptions& opts) {
    validate_schema(opts.schema);

    std::vector<RawEdge> raw;
    std::size_t self_loops = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto fields = split_fields(line);
        if (fields.empty()) continue;
        if (fields[0][0] == '%' || fields[0][0] == '#') continue;

        const bool weighted = fields.size() == opts.schema.size() + (opts.schema.size() == 3 ? 1 : 0);
        if (fields.size() != opts.schema.size() && !weighted)
            parse_fail(line_no, "expected " + std::to_string(opts.schema.size()) +
                                    (opts.schema.size() == 3 ? " or 4" : "") +
                                    " fields, got " + std::to_string(fields.size()));

        RawEdge e{0, 0, 0.0, 1.0};
        for (std::size_t c = 0; c < opts.schema.size(); ++c) {
            switch (opts.schema[c]) {
            case 's':
                if (!parse_number(fields[c], e.source))
                    parse_fail(line_no, "bad source id \"" + std::string(fields[c]) + "\"");
                break;
            case 'd':
                if (!parse_number(fields[c], e.target))
                    parse_fail(line_no, "bad target id \"" + std::string(fields[c]) + "\"");
                break;
            case 't':
                if (!parse_number(fields[c], e.timestamp) || !std::isfinite(e.timestamp))
                    parse_fail(line_no, "bad timestamp \"" + std::string(fields[c]) + "\"");
                break;
            case 'w':
                if (!parse_number(fields[c], e.weight))
                    parse_fail(line_no, "bad weight \"" + std::string(fields[c]) + "\"");
                break;
            }
        }
        if (opts.schema.size() == 3 && fields.size() == 4 &&
            !parse_number(fields[3], e.weight))
            parse_fail(line_no, "bad weight \"" + std::string(fields[3]) + "\"");
        if (!std::isfinite(e.weight) || e.weight <= 0.0)
            parse_fail(line_no, "weight must be a positive real");

        if (e.source == e.target) {
            ++self_loops;
            continue;
        }
        raw.push_back(e);
    }

    if (raw.empty()) throw ParseError("no edges in input");

    std::stable_sort(raw.begin(), raw.end(),
                     [](const RawEdge& a, const RawEdge& b) { return a.timestamp < b.timestamp; });

    EventStream stream;
    stream.skipped_self_loops = self_loops;
    std::unordered_map<std::uint64_t, NodeId> remap;
    remap.reserve(raw.size() / 4 + 8);
    auto dense = [&](std::uint64_t label) {
        auto [it, inserted] = remap.emplace(label, static_cast<NodeId>(stream.vocab.size()));
        if (inserted) stream.vocab.push_back(label);
        return it->second;
    };
    stream.edges.reserve(raw.size());
    for (const auto& e : raw)
        stream.edges.push_back({dense(e.source), dense(e.target), e.timestamp, e.weight});
    return stream;
}

EventStream ingest_edge_list(const std::string& path, const IngestOptions& opts) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open edge list: " + path);
    return ingest_edge_list(in, opts);
}

namespace {

// Collapses a contiguous range of temporal edges into one weighted snapshot.
Snapshot make_snapshot(const EventStream& stream, std::size_t first, std::size_t last,
                       int index, double span_begin, double span_end) {
    Snapshot snap;
    snap.index = index;
    snap.span_begin = span_begin;
    snap.span_end = span_end;
    snap.raw_edge_count = last - first;
    snap.adjacency.resize(stream.node_count());

    std::unordered_map<std::uint64_t, double> collapsed;
    collapsed.reserve(snap.raw_edge_count);
    for (std::size_t i = first; i < last; ++i) {
        const auto& e = stream.edges[i];
        NodeId a = std::min(e.source, e.target);
        NodeId b = std::max(e.source, e.target);
        collapsed[(std::uint64_t(a) << 32) | b] += e.weight;
    }

    std::vector<char> present(stream.node_count(), 0);
    for (const auto& [key, w] : collapsed) {
        NodeId a = static_cast<NodeId>(key >> 32);
        NodeId b = static_cast<NodeId>(key & 0xffffffffu);
        snap.adjacency[a].emplace_back(b, w);
        snap.adjacency[b].emplace_back(a, w);
        present[a] = present[b] = 1;
    }
    for (auto& row : snap.adjacency)
        std::sort(row.begin(), row.end());
    for (NodeId v = 0; v < present.size(); ++v)
        if (present[v]) snap.nodes.push_back(v);
    return snap;
}

} // namespace

DynamicNetwork build_by_time(const EventStream& stream, double window, double stride) {
    if (!(window > 0.0)) throw DataError("invalid stride: window must be positive");
    if (!(stride > 0.0) || stride > window)
        throw DataError("invalid stride: need 0 < stride <= window");
    if (stream.edges.empty()) throw DataError("empty event stream");

    DynamicNetwork net;
    net.vocab = stream.vocab;
    net.construction = {SliceStrategy::TimeInterval, window, stride,
                        (window - stride) / window};

    const double s_min = stream.edges.front().timestamp;
    const double s_max = stream.edges.back().timestamp;
    std::vector<double> times;
    times.reserve(stream.edges.size());
    for (const auto& e : stream.edges) times.push_back(e.timestamp);

    // Emit windows until the last event is covered; every span start stays
    // <= the last timestamp because stride <= window.
    int t = 1;
    while (true) {
        const double begin = s_min + (t - 1) * stride;
        const double end = begin + window;
        auto lo = std::lower_bound(times.begin(), times.end(), begin) - times.begin();
        auto hi = std::lower_bound(times.begin(), times.end(), end) - times.begin();
        net.snapshots.push_back(make_snapshot(stream, lo, hi, t, begin, end));
        if (end > s_max) break;
        ++t;
    }
    return net;
}

DynamicNetwork build_by_events(const EventStream& stream, std::size_t window,
                               std::size_t stride) {
    if (window < 1) throw DataError("invalid stride: event window must be >= 1");
    if (stride < 1 || stride > window)
        throw DataError("invalid stride: need 1 <= stride <= window");
    if (stream.edges.empty()) throw DataError("empty event stream");

    DynamicNetwork net;
    net.vocab = stream.vocab;
    net.construction = {SliceStrategy::EventCount, double(window), double(stride),
                        double(window - stride) / double(window)};

    const std::size_t n = stream.edges.size();
    // Window t spans event indices ((t-1)*stride, (t-1)*stride + window],
    // 1-based. Full windows first; one trailing partial window only when
    // events past the last full window remain.
    std::size_t full = n >= window ? (n - window) / stride + 1 : 0;
    std::size_t covered = full > 0 ? (full - 1) * stride + window : 0;
    std::size_t total = full + (covered < n ? 1 : 0);

    for (std::size_t t = 1; t <= total; ++t) {
        std::size_t first = (t - 1) * stride; // exclusive-left, so 0-based first index
        std::size_t last = std::min(first + window, n);
        net.snapshots.push_back(
            make_snapshot(stream, first, last, int(t), double(first), double(last)));
    }
    return net;
}

std::pair<EventStream, EventStream> time_split(const EventStream& stream,
                                               double train_fraction) {
    if (!(train_fraction > 0.0) || !(train_fraction < 1.0))
        throw DataError("train fraction must be in (0, 1)");
    const std::size_t n_train =
        static_cast<std::size_t>(stream.edges.size() * train_fraction);
    if (n_train == 0 || n_train == stream.edges.size())
        throw DataError("split leaves an empty stream");

    EventStream train, test;
    train.vocab = stream.vocab;
    test.vocab = stream.vocab;
    train.edges.assign(stream.edges.begin(), stream.edges.begin() + n_train);
    test.edges.assign(stream.edges.begin() + n_train, stream.edges.end());
    return {std::move(train), std::move(test)};
}

namespace {

std::string snapshot_filename(int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "snapshot_%03d.txt", index);
    return buf;
}

} // namespace

void dump_snapshots(const DynamicNetwork& network, const std::string& dir) {
    fs::create_directories(dir);
    json manifest;
    manifest["timesteps"] = network.timestep_count();
    switch (network.construction.strategy) {
    case SliceStrategy::TimeInterval:
        manifest["strategy"] = "time";
        manifest["window"] = network.construction.window;
        break;
    case SliceStrategy::EventCount:
        manifest["strategy"] = "events";
        manifest["window"] = network.construction.window;
        break;
    case SliceStrategy::Direct:
        manifest["strategy"] = "direct";
        break;
    }
    if (network.construction.strategy != SliceStrategy::Direct) {
        manifest["stride"] = network.construction.stride;
        manifest["gamma"] = network.construction.gamma;
    }
    manifest["vocab_size"] = network.vocab_size();

    json per_snapshot = json::array();
    for (const auto& snap : network.snapshots) {
        std::ofstream out(fs::path(dir) / snapshot_filename(snap.index));
        out.precision(17);
        for (NodeId u : snap.nodes)
            for (const auto& [v, w] : snap.adjacency[u])
                if (u < v)
                    out << network.vocab[u] << ' ' << network.vocab[v] << ' ' << w << '\n';
        per_snapshot.push_back({{"index", snap.index},
                                {"nodes", snap.nodes.size()},
                                {"edges", snap.edge_count()},
                                {"raw_edges", snap.raw_edge_count},
                                {"span", {snap.span_begin, snap.span_end}}});
    }
    manifest["snapshots"] = per_snapshot;

    std::ofstream mf(fs::path(dir) / "manifest.json");
    mf << manifest.dump(2) << '\n';
}

DynamicNetwork load_snapshots(const std::string& dir) {
    std::vector<fs::path> files;
    if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir);
    for (const auto& entry : fs::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        if (name.rfind("snapshot_", 0) == 0 && entry.path().extension() == ".txt")
            files.push_back(entry.path());
    }
    if (files.empty()) throw DataError("no snapshot files in " + dir);
    std::sort(files.begin(), files.end());

    DynamicNetwork net;
    net.construction.strategy = SliceStrategy::Direct;

    std::unordered_map<std::uint64_t, NodeId> remap;
    auto dense = [&](std::uint64_t label) {
        auto [it, inserted] = remap.emplace(label, static_cast<NodeId>(net.vocab.size()));
        if (inserted) net.vocab.push_back(label);
        return it->second;
    };

    struct Entry {
        NodeId u, v;
        double w;
    };
    std::vector<std::vector<Entry>> per_file;
    for (const auto& path : files) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open " + path.string());
        std::vector<Entry> entries;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            auto fields = split_fields(line);
            if (fields.empty() || fields[0][0] == '%' || fields[0][0] == '#') continue;
            std::uint64_t a, b;
            double w = 1.0;
            if (fields.size() < 2 || fields.size() > 3 || !parse_number(fields[0], a) ||
                !parse_number(fields[1], b) ||
                (fields.size() == 3 && !parse_number(fields[2], w)))
                throw ParseError(path.filename().string() + " line " +
                                 std::to_string(line_no) + ": bad snapshot entry");
            if (a == b) continue;
            entries.push_back({dense(a), dense(b), w});
        }
        per_file.push_back(std::move(entries));
    }

    for (std::size_t i = 0; i < per_file.size(); ++i) {
        Snapshot snap;
        snap.index = int(i + 1);
        snap.span_begin = double(i + 1);
        snap.span_end = double(i + 2);
        snap.raw_edge_count = per_file[i].size();
        snap.adjacency.resize(net.vocab.size());
        std::unordered_map<std::uint64_t, double> collapsed;
        for (const auto& e : per_file[i]) {
            NodeId a = std::min(e.u, e.v), b = std::max(e.u, e.v);
            collapsed[(std::uint64_t(a) << 32) | b] += e.w;
        }
        std::vector<char> present(net.vocab.size(), 0);
        for (const auto& [key, w] : collapsed) {
            NodeId a = static_cast<NodeId>(key >> 32);
            NodeId b = static_cast<NodeId>(key & 0xffffffffu);
            snap.adjacency[a].emplace_back(b, w);
            snap.adjacency[b].emplace_back(a, w);
            present[a] = present[b] = 1;
        }
        for (auto& row : snap.adjacency) std::sort(row.begin(), row.end());
        for (NodeId v = 0; v < present.size(); ++v)
            if (present[v]) snap.nodes.push_back(v);
        net.snapshots.push_back(std::move(snap));
    }
    // Rows were sized while the vocabulary was still growing.
    for (auto& snap : net.snapshots) snap.adjacency.resize(net.vocab.size());
    return net;
}

} // namespace dynembed
