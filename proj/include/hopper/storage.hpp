// Log-structured document store: named indices partitioned into shards,
// each shard an append-only sequence of immutable segments. Sealed
// segments carry per-field inverted indexes (exact-match term dictionary),
// a sorted numeric value array, and a columnar value store. Snapshots pin
// segment lists so reads never observe later seals or merges.

#pragma once

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "hopper/bitset.hpp"
#include "hopper/common.hpp"

namespace hopper::storage {

// ---------------------------------------------------------------------------
// Filters: conjunction of exact terms and numeric ranges. This is the only
// filter algebra the engine needs; everything else (disjunction, nesting)
// lives above, in the plan.

struct TermFilter {
    std::string field;
    Scalar value;
};

struct RangeFilter {
    std::string field;
    std::optional<double> lo;  // nullopt = unbounded
    std::optional<double> hi;
    bool lo_inclusive = false;
    bool hi_inclusive = false;
};

struct Filter {
    std::vector<TermFilter> terms;
    std::vector<RangeFilter> ranges;

    bool match_all() const { return terms.empty() && ranges.empty(); }

    static Filter term(std::string field, Scalar value) {
        Filter f;
        f.terms.push_back({std::move(field), std::move(value)});
        return f;
    }
    static Filter range(std::string field, std::optional<double> lo,
                        std::optional<double> hi, bool lo_incl = false,
                        bool hi_incl = false) {
        Filter f;
        f.ranges.push_back({std::move(field), lo, hi, lo_incl, hi_incl});
        return f;
    }
    Filter conjoin(const Filter& other) const {
        Filter f = *this;
        f.terms.insert(f.terms.end(), other.terms.begin(), other.terms.end());
        f.ranges.insert(f.ranges.end(), other.ranges.begin(), other.ranges.end());
        return f;
    }

    /// Canonical rendering: terms and ranges sorted, ranges normalized to
    /// half-open [lo, hi) form. Two filters with equal canonical strings
    /// select the same documents.
    std::string canonical() const;
};

bool filter_matches_doc(const Filter& f, const Document& doc);

// ---------------------------------------------------------------------------
// Segments

struct FieldStats {
    std::uint8_t kinds = 0;  // ScalarKind bits observed
    std::uint32_t max_values_per_doc = 0;
    std::uint64_t docs_with_field = 0;
    std::uint64_t distinct_values = 0;
};

class Segment {
public:
    Segment(std::uint32_t id, std::vector<Document> docs);

    std::uint32_t id() const { return id_; }
    std::uint32_t doc_count() const { return static_cast<std::uint32_t>(docs_.size()); }
    const Document& doc(std::uint32_t ordinal) const { return docs_[ordinal]; }
    const std::vector<Document>& docs() const { return docs_; }

    /// Ordinals (ascending) of docs containing the exact value in field.
    std::vector<std::uint32_t> term_ordinals(const std::string& field,
                                             const Scalar& value) const;
    std::vector<std::uint32_t> range_ordinals(const RangeFilter& r) const;

    /// Stream (ordinal, value) pairs in ordinal order; multi-valued docs
    /// emit one pair per value.
    void scan_column(const std::string& field,
                     const std::function<void(std::uint32_t, const Scalar&)>& fn) const;
    void scan_column_filtered(
        const std::string& field, const std::vector<std::uint32_t>& ordinals,
        const std::function<void(std::uint32_t, const Scalar&)>& fn) const;

    const FieldStats* field_stats(const std::string& field) const;
    const std::map<std::string, FieldStats>& all_field_stats() const {
        return field_stats_;
    }

private:
    struct Column {
        std::vector<std::uint32_t> offsets;  // doc_count + 1 entries
        std::vector<Scalar> values;
    };

    std::uint32_t id_;
    std::vector<Document> docs_;
    std::map<std::string, Column> columns_;
    // field -> term -> sorted ordinal postings (text terms only)
    std::map<std::string, std::map<std::string, std::vector<std::uint32_t>>> text_postings_;
    // field -> (numeric value, ordinal), sorted
    std::map<std::string, std::vector<std::pair<double, std::uint32_t>>> numeric_index_;
    std::map<std::string, FieldStats> field_stats_;
};

using SegmentPtr = std::shared_ptr<const Segment>;

// ---------------------------------------------------------------------------
// Snapshots

struct SnapshotIndex {
    std::uint16_t shard_count = 0;
    std::string routing_field;
    std::uint64_t epoch = 0;
    std::uint64_t doc_count = 0;
    // per shard, the sealed segments visible to this snapshot
    std::vector<std::vector<SegmentPtr>> shards;
};

class Snapshot {
public:
    const SnapshotIndex& index(const std::string& name) const;
    bool has_index(const std::string& name) const {
        return indices_.find(name) != indices_.end();
    }
    const std::map<std::string, SnapshotIndex>& indices() const { return indices_; }

    /// Epochs of the given indices at acquisition time.
    std::map<std::string, std::uint64_t> epoch_vector() const;

private:
    friend class Store;
    std::map<std::string, SnapshotIndex> indices_;
};

// ---------------------------------------------------------------------------
// Store

struct IndexCounters {
    mutable std::atomic<std::uint64_t> column_scans{0};
    mutable std::atomic<std::uint64_t> scanned_values{0};
    mutable std::atomic<std::uint64_t> term_lookups{0};
    mutable std::atomic<std::uint64_t> range_lookups{0};
};

class Store {
public:
    Store() = default;
    Store(const Store&) = delete;
    Store& operator=(const Store&) = delete;

    void create_index(const std::string& name, std::uint16_t shard_count,
                      const std::string& routing_field);
    bool has_index(const std::string& name) const;
    std::vector<std::string> index_names() const;

    std::vector<GlobalDocId> add_documents(const std::string& index,
                                           const std::vector<Document>& docs);

    /// Seals the open segment of a shard; nullopt when it was empty.
    std::optional<std::uint32_t> seal_segment(const std::string& index,
                                              std::uint16_t shard);
    void seal_all(const std::string& index);

    std::uint32_t merge_segments(const std::string& index, std::uint16_t shard,
                                 const std::vector<std::uint32_t>& segment_ids);

    Snapshot open_snapshot(const std::vector<std::string>& indices) const;
    Snapshot open_snapshot_all() const;

    std::uint64_t epoch(const std::string& index) const;
    std::uint16_t shard_count(const std::string& index) const;
    std::string routing_field(const std::string& index) const;

    /// Shard a routing key routes to; add_documents uses the first value
    /// of the routing field. Stable across runs.
    static std::uint16_t route_shard(const Scalar& key, std::uint16_t shard_count);

    // ---- reads (all through a snapshot) ----

    std::vector<GlobalDocId> term_lookup(const Snapshot& snap,
                                         const std::string& index,
                                         const std::string& field,
                                         const Scalar& value) const;
    std::vector<GlobalDocId> range_lookup(const Snapshot& snap,
                                          const std::string& index,
                                          const RangeFilter& range) const;

    void scan_field_column(
        const Snapshot& snap, const std::string& index, const std::string& field,
        const DocBitset* doc_filter,
        const std::function<void(GlobalDocId, const Scalar&)>& fn) const;

    std::vector<Document> materialize_docs(const Snapshot& snap,
                                           const std::string& index,
                                           const std::vector<GlobalDocId>& ids,
                                           const std::vector<std::string>& fields) const;

    /// Conjunction filter evaluated through index structures only
    /// (no column scans).
    DocBitset eval_filter(const Snapshot& snap, const std::string& index,
                          const Filter& filter) const;

    DocBitset all_docs(const Snapshot& snap, const std::string& index) const;

    /// Merged per-field statistics over the snapshot's segments.
    FieldStats field_stats(const Snapshot& snap, const std::string& index,
                           const std::string& field) const;

    const IndexCounters& counters(const std::string& index) const;

private:
    struct Shard {
        std::vector<SegmentPtr> sealed;
        std::vector<Document> open_docs;
        std::uint32_t open_segment_id = 0;
        std::uint32_t next_segment_id = 1;
    };

    struct IndexState {
        std::string name;
        std::uint16_t shard_count;
        std::string routing_field;
        std::uint64_t epoch = 0;
        std::vector<Shard> shards;
        mutable std::mutex write_mutex;  // single writer per index
        std::unique_ptr<IndexCounters> counters = std::make_unique<IndexCounters>();
    };

    const SegmentPtr& segment_for(const Snapshot& snap, const std::string& index,
                                  GlobalDocId id) const;

    mutable std::shared_mutex registry_mutex_;
    std::map<std::string, std::unique_ptr<IndexState>> indices_;
};

}  // namespace hopper::storage
