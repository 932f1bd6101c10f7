// Columnar batches for intermediate join tuples plus the simulated-cluster
// exchange operators. All data movement is in-process; the topology tracks
// per-channel byte counters using a deterministic wire-size model
// (8 bytes per doc id, 8 per numeric value, UTF-8 length per text value).
// Local delivery (sender == receiver) costs zero network bytes.

#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hopper/common.hpp"

namespace hopper::exchange {

constexpr std::size_t kDefaultBatchCapacity = 1024;

// ---------------------------------------------------------------------------
// Tuples and batches

/// One intermediate tuple: a document id plus named key/value columns.
struct Tuple {
    GlobalDocId id;
    std::vector<KeyValue> values;
};

std::uint64_t tuple_wire_size(const Tuple& t);

/// Fixed-capacity columnar block. Immutable once built: construct through
/// BatchBuilder or build_batches.
class Batch {
public:
    Batch(std::vector<std::string> col_names, std::size_t capacity)
        : col_names_(std::move(col_names)), capacity_(capacity),
          cols_(col_names_.size()) {}

    std::size_t rows() const { return ids_.size(); }
    std::size_t capacity() const { return capacity_; }
    const std::vector<std::string>& col_names() const { return col_names_; }
    const std::vector<GlobalDocId>& ids() const { return ids_; }
    const std::vector<KeyValue>& column(std::size_t c) const { return cols_[c]; }

    Tuple tuple_at(std::size_t row) const {
        Tuple t;
        t.id = ids_[row];
        t.values.reserve(cols_.size());
        for (const auto& col : cols_) t.values.push_back(col[row]);
        return t;
    }

    std::uint64_t wire_size() const;

private:
    friend class BatchBuilder;
    std::vector<std::string> col_names_;
    std::size_t capacity_;
    std::vector<GlobalDocId> ids_;
    std::vector<std::vector<KeyValue>> cols_;
};

using BatchStream = std::vector<Batch>;

class BatchBuilder {
public:
    BatchBuilder(std::vector<std::string> col_names,
                 std::size_t capacity = kDefaultBatchCapacity);

    void push(const Tuple& t);
    void push(GlobalDocId id, std::vector<KeyValue> values);
    /// Flushes the trailing partial batch and returns the stream.
    BatchStream finish();

private:
    std::vector<std::string> col_names_;
    std::size_t capacity_;
    Batch current_;
    BatchStream done_;
};

BatchStream build_batches(const std::vector<Tuple>& tuples,
                          const std::vector<std::string>& col_names,
                          std::size_t capacity = kDefaultBatchCapacity);
std::vector<Tuple> flatten(const BatchStream& stream);
std::uint64_t stream_wire_size(const BatchStream& stream);
std::uint64_t stream_rows(const BatchStream& stream);

// ---------------------------------------------------------------------------
// Cluster topology

/// Simulated cluster: numbered nodes, a shard->node placement per index,
/// and monotone per-channel byte counters.
class ClusterTopology {
public:
    explicit ClusterTopology(int node_count);

    int node_count() const { return node_count_; }

    void assign_shards(const std::string& index, std::uint16_t shard_count);
    void assign_shard(const std::string& index, std::uint16_t shard, int node);
    int node_of(const std::string& index, std::uint16_t shard) const;
    std::vector<int> nodes_hosting(const std::string& index) const;

    /// Records bytes sent from one node to another; local delivery is free.
    void add_bytes(int from, int to, std::uint64_t bytes);

    std::uint64_t channel_bytes(int from, int to) const;
    std::uint64_t total_bytes() const;
    std::map<std::pair<int, int>, std::uint64_t> channel_stats() const;

private:
    int node_count_;
    std::map<std::pair<std::string, std::uint16_t>, int> placement_;
    std::vector<std::atomic<std::uint64_t>> channels_;  // node_count^2
};

// ---------------------------------------------------------------------------
// Morsels

/// A constant-sized unit of scan work: a contiguous ordinal range of one
/// segment. Morsels of one scan partition the range exactly once.
struct Morsel {
    std::uint16_t shard;
    std::uint32_t segment;
    std::uint32_t begin;
    std::uint32_t end;
};

constexpr std::uint32_t kDefaultMorselSize = 4096;

std::vector<Morsel> make_morsels(std::uint16_t shard, std::uint32_t segment,
                                 std::uint32_t doc_count,
                                 std::uint32_t max_size = kDefaultMorselSize);

// ---------------------------------------------------------------------------
// Exchange operators

/// Globally sorts tuples by GlobalDocId, stable on duplicates. Internally
/// radix-partitions on id ranges, sorts per partition, concatenates.
BatchStream sort_batches_by_docid(const BatchStream& stream,
                                  std::size_t capacity = kDefaultBatchCapacity);

enum class PartitionKey { DocId, HashColumn };

/// Splits a stream into `partitions` streams. DocId keys partition by id
/// range (monotone); hash keys by stable hash of the named column.
/// Within-partition relative order is preserved.
std::vector<BatchStream> radix_partition(const BatchStream& stream,
                                         std::size_t partitions, PartitionKey key,
                                         const std::string& hash_column = {},
                                         std::size_t capacity = kDefaultBatchCapacity);

/// Delivers the full stream to every receiver, counting channel bytes for
/// each non-local delivery.
std::map<int, BatchStream> broadcast(ClusterTopology& topo, int sender,
                                     const BatchStream& stream,
                                     const std::vector<int>& receivers);

/// Hash-partitions tuples across all nodes by the named column:
/// node = hash(key) mod node_count. Non-local tuples are charged to the
/// sender->receiver channel.
std::map<int, BatchStream> partition_exchange(ClusterTopology& topo, int sender,
                                              const BatchStream& stream,
                                              const std::string& hash_column,
                                              std::size_t capacity = kDefaultBatchCapacity);

/// Routes each tuple to the shard its key value routes to under the parent
/// index's routing function; delivery is per parent shard. A tuple whose
/// key routes to a shard hosted on the sender costs nothing.
std::map<std::uint16_t, BatchStream> route_exchange(
    ClusterTopology& topo, int sender, const BatchStream& stream,
    const std::string& key_column, const std::string& parent_index,
    std::uint16_t parent_shard_count,
    std::size_t capacity = kDefaultBatchCapacity);

}  // namespace hopper::exchange
