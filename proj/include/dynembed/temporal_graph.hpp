#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace dynembed {

using NodeId = std::uint32_t;

// One timestamped interaction. Node ids are dense 0-based indices into the
// owning stream's vocabulary.
struct TemporalEdge {
    NodeId source = 0;
    NodeId target = 0;
    double timestamp = 0.0;
    double weight = 1.0;
};

// Timestamp-ordered event sequence plus the dense-id vocabulary created at
// ingest. Splitting a stream keeps the parent vocabulary so downstream
// consumers agree on ids.
struct EventStream {
    std::vector<TemporalEdge> edges; // ascending timestamp, ties in input order
    std::vector<std::uint64_t> vocab; // dense id -> original label
    std::size_t skipped_self_loops = 0;

    std::size_t node_count() const { return vocab.size(); }
};

// Static weighted undirected graph induced by the temporal edges of one
// window. Parallel temporal edges collapse to a single entry whose weight is
// the sum of input weights.
struct Snapshot {
    int index = 0;             // timestep, 1-based
    double span_begin = 0.0;   // time units, or event index units
    double span_end = 0.0;
    std::vector<NodeId> nodes; // V_t, ascending
    std::vector<std::vector<std::pair<NodeId, double>>> adjacency; // size = vocab
    std::size_t raw_edge_count = 0; // temporal edges before collapsing

    std::size_t degree(NodeId v) const { return adjacency[v].size(); }
    bool has_edge(NodeId u, NodeId v) const;
    std::size_t edge_count() const; // collapsed undirected edges
};

enum class SliceStrategy { TimeInterval, EventCount, Direct };

struct SliceParams {
    SliceStrategy strategy = SliceStrategy::Direct;
    double window = 0.0; // omega (time) or epsilon (events)
    double stride = 0.0; // delta-t or delta-e
    double gamma = 0.0;  // (window - stride) / window
};

struct DynamicNetwork {
    std::vector<Snapshot> snapshots;
    SliceParams construction;
    std::vector<std::uint64_t> vocab; // dense id -> original label

    std::size_t timestep_count() const { return snapshots.size(); }
    std::size_t vocab_size() const { return vocab.size(); }
    // Nodes with at least one edge in some snapshot, ascending.
    std::vector<NodeId> active_vocabulary() const;
};

struct IngestOptions {
    // Column roles, in file order: 's' source, 'd' target, 't' timestamp,
    // 'w' weight. A 3-letter schema accepts an optional trailing weight
    // column; a 4-letter schema requires all four.
    std::string schema = "sdt";
};

EventStream ingest_edge_list(std::istream& in, const IngestOptions& opts = {});
EventStream ingest_edge_list(const std::string& path, const IngestOptions& opts = {});

DynamicNetwork build_by_time(const EventStream& stream, double window, double stride);
DynamicNetwork build_by_events(const EventStream& stream, std::size_t window,
                               std::size_t stride);

std::pair<EventStream, EventStream> time_split(const EventStream& stream,
                                               double train_fraction);

// Writes one "u v weight" file per timestep plus manifest.json. Node ids in
// the dump are original labels.
void dump_snapshots(const DynamicNetwork& network, const std::string& dir);

// Reads a directory of per-timestep edge lists (the dump_snapshots layout,
// also produced by the synthetic generator) back into a network.
DynamicNetwork load_snapshots(const std::string& dir);

} // namespace dynembed
