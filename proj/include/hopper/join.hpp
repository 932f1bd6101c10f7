// Semi-join and inner-join execution over the simulated cluster. Four
// strategies share one contract: the parent side is filtered to documents
// with at least one key-value intersection against the child side.
// Semi results are bitsets over parent ids; inner results are
// (parent, child) doc-id pairs sorted and grouped by parent id, one pair
// per matching document pair regardless of how many values overlap.
// Field content is never carried through the join (late materialization).

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hopper/bitset.hpp"
#include "hopper/common.hpp"
#include "hopper/exchange.hpp"
#include "hopper/storage.hpp"
#include "hopper/workers.hpp"

namespace hopper::join {

enum class JoinKind { Semi, Inner };

enum class Strategy { BroadcastHash, BroadcastIndex, PartitionedHash, Routing };

const char* strategy_name(Strategy s);

/// One side of a join: an index, its filter, an optional restriction
/// bitset (the result of an upstream sub-plan), and the join key field.
struct SideSpec {
    std::string index;
    storage::Filter filter;
    BitsetPtr restriction;  // null = unrestricted
    std::string key_field;
};

struct ProjItem {
    std::string field;
    std::string label;
};

struct JoinSpec {
    SideSpec parent;
    SideSpec child;
    JoinKind kind = JoinKind::Semi;
    std::vector<ProjItem> child_projection;  // inner only; applied at
                                             // materialization, not here
};

struct InnerPair {
    GlobalDocId parent;
    GlobalDocId child;
    friend auto operator<=>(const InnerPair&, const InnerPair&) = default;
};

struct JoinResult {
    JoinKind kind = JoinKind::Semi;
    std::shared_ptr<DocBitset> semi;    // semi: matching parent ids
    std::vector<InnerPair> pairs;       // inner: sorted by (parent, child)
};

struct ExecStats {
    Strategy strategy = Strategy::BroadcastHash;
    std::uint64_t build_tuples = 0;
    std::uint64_t probe_tuples = 0;
    std::uint64_t bytes_exchanged = 0;
    std::vector<std::uint64_t> build_tuples_per_node;
    double wall_seconds = 0;
};

/// Throws TypeMismatch when one key field is text-only and the other
/// numeric-only in the snapshot. Run before execution (planning time).
void check_join_key_types(const storage::Store& store,
                          const storage::Snapshot& snap, const JoinSpec& spec);

JoinResult broadcast_hash_join(storage::Store& store, const storage::Snapshot& snap,
                               const JoinSpec& spec, exchange::ClusterTopology& topo,
                               WorkerPool& pool, ExecStats* stats = nullptr);

JoinResult broadcast_index_join(storage::Store& store, const storage::Snapshot& snap,
                                const JoinSpec& spec, exchange::ClusterTopology& topo,
                                WorkerPool& pool, ExecStats* stats = nullptr);

JoinResult partitioned_hash_join(storage::Store& store, const storage::Snapshot& snap,
                                 const JoinSpec& spec, exchange::ClusterTopology& topo,
                                 WorkerPool& pool, ExecStats* stats = nullptr);

/// Requires parent.key_field == the parent index routing field, and a
/// single-valued routing key (otherwise co-location is not guaranteed).
JoinResult routing_join(storage::Store& store, const storage::Snapshot& snap,
                        const JoinSpec& spec, exchange::ClusterTopology& topo,
                        WorkerPool& pool, ExecStats* stats = nullptr);

JoinResult execute_join(Strategy strategy, storage::Store& store,
                        const storage::Snapshot& snap, const JoinSpec& spec,
                        exchange::ClusterTopology& topo, WorkerPool& pool,
                        ExecStats* stats = nullptr);

/// True when the routing strategy's preconditions hold for this spec.
bool routing_applicable(const storage::Store& store, const storage::Snapshot& snap,
                        const JoinSpec& spec);

/// Merges per-node result fragments: semi fragments are OR-ed (idempotent
/// set insert), inner fragments concatenated, sorted by parent id and
/// deduplicated to one tuple per (parent, child) document pair.
JoinResult group_sort_output(JoinKind kind, std::vector<DocBitset> semi_fragments,
                             std::vector<std::vector<InnerPair>> pair_fragments);

}  // namespace hopper::join
