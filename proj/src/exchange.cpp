#include "hopper/exchange.hpp"

#include <algorithm>
#include <stdexcept>

namespace hopper::exchange {

std::uint64_t tuple_wire_size(const Tuple& t) {
    std::uint64_t n = 8;  // GlobalDocId
    for (const KeyValue& v : t.values) n += key_wire_size(v);
    return n;
}

std::uint64_t Batch::wire_size() const {
    std::uint64_t n = 8 * ids_.size();
    for (const auto& col : cols_)
        for (const KeyValue& v : col) n += key_wire_size(v);
    return n;
}

BatchBuilder::BatchBuilder(std::vector<std::string> col_names, std::size_t capacity)
    : col_names_(col_names), capacity_(std::max<std::size_t>(1, capacity)),
      current_(std::move(col_names), capacity_) {}

void BatchBuilder::push(const Tuple& t) {
    push(t.id, t.values);
}

void BatchBuilder::push(GlobalDocId id, std::vector<KeyValue> values) {
    if (values.size() != col_names_.size())
        throw EngineError(ErrorCode::InvalidArgument, "tuple arity mismatch");
    current_.ids_.push_back(id);
    for (std::size_t c = 0; c < values.size(); ++c)
        current_.cols_[c].push_back(std::move(values[c]));
    if (current_.rows() == capacity_) {
        done_.push_back(std::move(current_));
        current_ = Batch(col_names_, capacity_);
    }
}

BatchStream BatchBuilder::finish() {
    if (current_.rows() > 0) done_.push_back(std::move(current_));
    current_ = Batch(col_names_, capacity_);
    return std::move(done_);
}

BatchStream build_batches(const std::vector<Tuple>& tuples,
                          const std::vector<std::string>& col_names,
                          std::size_t capacity) {
    BatchBuilder b(col_names, capacity);
    for (const Tuple& t : tuples) b.push(t);
    return b.finish();
}

std::vector<Tuple> flatten(const BatchStream& stream) {
    std::vector<Tuple> out;
    out.reserve(stream_rows(stream));
    for (const Batch& b : stream)
        for (std::size_t r = 0; r < b.rows(); ++r) out.push_back(b.tuple_at(r));
    return out;
}

std::uint64_t stream_wire_size(const BatchStream& stream) {
    std::uint64_t n = 0;
    for (const Batch& b : stream) n += b.wire_size();
    return n;
}

std::uint64_t stream_rows(const BatchStream& stream) {
    std::uint64_t n = 0;
    for (const Batch& b : stream) n += b.rows();
    return n;
}

// ---------------------------------------------------------------------------
// ClusterTopology

ClusterTopology::ClusterTopology(int node_count)
    : node_count_(std::max(1, node_count)),
      channels_(static_cast<std::size_t>(node_count_) * node_count_) {
    for (auto& c : channels_) c.store(0);
}

void ClusterTopology::assign_shards(const std::string& index,
                                    std::uint16_t shard_count) {
    for (std::uint16_t s = 0; s < shard_count; ++s)
        placement_[{index, s}] = s % node_count_;
}

void ClusterTopology::assign_shard(const std::string& index, std::uint16_t shard,
                                   int node) {
    if (node < 0 || node >= node_count_)
        throw EngineError(ErrorCode::InvalidArgument, "node out of range");
    placement_[{index, shard}] = node;
}

int ClusterTopology::node_of(const std::string& index, std::uint16_t shard) const {
    auto it = placement_.find({index, shard});
    if (it == placement_.end())
        throw EngineError(ErrorCode::InvalidArgument,
                          "shard not placed: " + index + "/" + std::to_string(shard));
    return it->second;
}

std::vector<int> ClusterTopology::nodes_hosting(const std::string& index) const {
    std::vector<int> out;
    for (const auto& [key, node] : placement_) {
        if (key.first == index) out.push_back(node);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

void ClusterTopology::add_bytes(int from, int to, std::uint64_t bytes) {
    if (from == to) return;
    channels_[static_cast<std::size_t>(from) * node_count_ + to].fetch_add(
        bytes, std::memory_order_relaxed);
}

std::uint64_t ClusterTopology::channel_bytes(int from, int to) const {
    return channels_[static_cast<std::size_t>(from) * node_count_ + to].load();
}

std::uint64_t ClusterTopology::total_bytes() const {
    std::uint64_t n = 0;
    for (const auto& c : channels_) n += c.load();
    return n;
}

std::map<std::pair<int, int>, std::uint64_t> ClusterTopology::channel_stats() const {
    std::map<std::pair<int, int>, std::uint64_t> out;
    for (int f = 0; f < node_count_; ++f)
        for (int t = 0; t < node_count_; ++t)
            if (std::uint64_t b = channel_bytes(f, t)) out[{f, t}] = b;
    return out;
}

// ---------------------------------------------------------------------------
// Morsels

std::vector<Morsel> make_morsels(std::uint16_t shard, std::uint32_t segment,
                                 std::uint32_t doc_count, std::uint32_t max_size) {
    max_size = std::max<std::uint32_t>(1, max_size);
    std::vector<Morsel> out;
    for (std::uint32_t lo = 0; lo < doc_count; lo += max_size)
        out.push_back({shard, segment, lo, std::min(doc_count, lo + max_size)});
    return out;
}

// ---------------------------------------------------------------------------
// Sorting and partitioning

namespace {

std::size_t column_of(const Batch& b, const std::string& name) {
    const auto& names = b.col_names();
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return i;
    throw EngineError(ErrorCode::MissingField, "column not in batch: " + name);
}

}  // namespace

BatchStream sort_batches_by_docid(const BatchStream& stream, std::size_t capacity) {
    if (stream.empty()) return {};
    std::vector<Tuple> tuples = flatten(stream);
    if (tuples.empty()) return {};

    // Radix partition on the high bits of the packed id range, then sort
    // each partition; concatenation is then globally sorted.
    std::uint64_t lo = ~0ull, hi = 0;
    for (const Tuple& t : tuples) {
        lo = std::min(lo, t.id.packed());
        hi = std::max(hi, t.id.packed());
    }
    constexpr std::size_t kPartitions = 64;
    const std::uint64_t span = hi - lo + 1;
    const std::uint64_t width = std::max<std::uint64_t>(1, span / kPartitions + 1);
    std::vector<std::vector<Tuple>> parts(kPartitions);
    for (Tuple& t : tuples) {
        const std::size_t p =
            std::min<std::uint64_t>(kPartitions - 1, (t.id.packed() - lo) / width);
        parts[p].push_back(std::move(t));
    }
    BatchBuilder out(stream.front().col_names(), capacity);
    for (auto& part : parts) {
        std::stable_sort(part.begin(), part.end(),
                         [](const Tuple& a, const Tuple& b) { return a.id < b.id; });
        for (Tuple& t : part) out.push(t);
    }
    return out.finish();
}

std::vector<BatchStream> radix_partition(const BatchStream& stream,
                                         std::size_t partitions, PartitionKey key,
                                         const std::string& hash_column,
                                         std::size_t capacity) {
    partitions = std::max<std::size_t>(1, partitions);
    std::vector<Tuple> tuples = flatten(stream);
    std::vector<std::string> names =
        stream.empty() ? std::vector<std::string>{} : stream.front().col_names();
    std::vector<BatchBuilder> builders;
    builders.reserve(partitions);
    for (std::size_t p = 0; p < partitions; ++p) builders.emplace_back(names, capacity);

    if (key == PartitionKey::DocId) {
        std::uint64_t lo = ~0ull, hi = 0;
        for (const Tuple& t : tuples) {
            lo = std::min(lo, t.id.packed());
            hi = std::max(hi, t.id.packed());
        }
        const std::uint64_t width =
            tuples.empty() ? 1 : std::max<std::uint64_t>(1, (hi - lo) / partitions + 1);
        for (const Tuple& t : tuples) {
            const std::size_t p =
                std::min<std::uint64_t>(partitions - 1, (t.id.packed() - lo) / width);
            builders[p].push(t);
        }
    } else {
        std::size_t col = 0;
        if (!stream.empty()) col = column_of(stream.front(), hash_column);
        for (const Tuple& t : tuples)
            builders[key_hash(t.values[col]) % partitions].push(t);
    }
    std::vector<BatchStream> out;
    out.reserve(partitions);
    for (auto& b : builders) out.push_back(b.finish());
    return out;
}

std::map<int, BatchStream> broadcast(ClusterTopology& topo, int sender,
                                     const BatchStream& stream,
                                     const std::vector<int>& receivers) {
    if (receivers.empty())
        throw EngineError(ErrorCode::InvalidArgument, "broadcast needs receivers");
    const std::uint64_t bytes = stream_wire_size(stream);
    std::map<int, BatchStream> out;
    for (int r : receivers) {
        topo.add_bytes(sender, r, bytes);  // no-op when r == sender
        out[r] = stream;
    }
    return out;
}

std::map<int, BatchStream> partition_exchange(ClusterTopology& topo, int sender,
                                              const BatchStream& stream,
                                              const std::string& hash_column,
                                              std::size_t capacity) {
    const int nodes = topo.node_count();
    std::vector<BatchStream> parts = radix_partition(
        stream, static_cast<std::size_t>(nodes), PartitionKey::HashColumn,
        hash_column, capacity);
    std::map<int, BatchStream> out;
    for (int n = 0; n < nodes; ++n) {
        if (n != sender) topo.add_bytes(sender, n, stream_wire_size(parts[n]));
        if (stream_rows(parts[n]) > 0) out[n] = std::move(parts[n]);
    }
    return out;
}

std::map<std::uint16_t, BatchStream> route_exchange(
    ClusterTopology& topo, int sender, const BatchStream& stream,
    const std::string& key_column, const std::string& parent_index,
    std::uint16_t parent_shard_count, std::size_t capacity) {
    std::map<std::uint16_t, BatchBuilder> builders;
    std::size_t col = 0;
    if (!stream.empty()) col = column_of(stream.front(), key_column);
    const std::vector<std::string> names =
        stream.empty() ? std::vector<std::string>{} : stream.front().col_names();

    std::map<int, std::uint64_t> node_bytes;
    for (const Batch& b : stream) {
        for (std::size_t r = 0; r < b.rows(); ++r) {
            Tuple t = b.tuple_at(r);
            const std::uint16_t shard = shard_for_key(t.values[col], parent_shard_count);
            auto it = builders.find(shard);
            if (it == builders.end())
                it = builders.emplace(shard, BatchBuilder(names, capacity)).first;
            node_bytes[topo.node_of(parent_index, shard)] += tuple_wire_size(t);
            it->second.push(t);
        }
    }
    for (const auto& [node, bytes] : node_bytes) topo.add_bytes(sender, node, bytes);

    std::map<std::uint16_t, BatchStream> out;
    for (auto& [shard, builder] : builders) out[shard] = builder.finish();
    return out;
}

}  // namespace hopper::exchange
