#include "hopper/storage.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

namespace hopper::storage {

// ---------------------------------------------------------------------------
// Filter

namespace {

std::string hex_double(double d) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%a", d);
    return buf;
}

// Half-open normalization: [lo', hi') with exclusive bounds nudged by one
// ulp. Exact on doubles, so canonical equality implies set equality.
std::pair<double, double> half_open(const RangeFilter& r) {
    double lo = r.lo ? *r.lo : -std::numeric_limits<double>::infinity();
    double hi = r.hi ? *r.hi : std::numeric_limits<double>::infinity();
    if (r.lo && !r.lo_inclusive)
        lo = std::nextafter(lo, std::numeric_limits<double>::infinity());
    if (r.hi && r.hi_inclusive)
        hi = std::nextafter(hi, std::numeric_limits<double>::infinity());
    return {lo, hi};
}

bool scalar_term_eq(const Scalar& doc_value, const Scalar& query_value) {
    if (is_text(query_value)) {
        return is_text(doc_value) &&
               std::get<std::string>(doc_value) == std::get<std::string>(query_value);
    }
    return is_numeric(doc_value) && numeric_of(doc_value) == numeric_of(query_value);
}

}  // namespace

std::string Filter::canonical() const {
    std::vector<std::string> parts;
    parts.reserve(terms.size() + ranges.size());
    for (const auto& t : terms) {
        std::string v = is_text(t.value)
                            ? "t:" + std::get<std::string>(t.value)
                            : "n:" + hex_double(numeric_of(t.value));
        parts.push_back("T(" + t.field + "=" + v + ")");
    }
    for (const auto& r : ranges) {
        auto [lo, hi] = half_open(r);
        parts.push_back("R(" + r.field + ",[" + hex_double(lo) + "," +
                        hex_double(hi) + "))");
    }
    std::sort(parts.begin(), parts.end());
    std::string out = "{";
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += "&";
        out += parts[i];
    }
    out += "}";
    return out;
}

bool filter_matches_doc(const Filter& f, const Document& doc) {
    for (const auto& t : f.terms) {
        const FieldValue* v = doc.find(t.field);
        if (!v) return false;
        bool any = false;
        for (const Scalar& s : *v) any = any || scalar_term_eq(s, t.value);
        if (!any) return false;
    }
    for (const auto& r : f.ranges) {
        const FieldValue* v = doc.find(r.field);
        if (!v) return false;
        auto [lo, hi] = half_open(r);
        bool any = false;
        for (const Scalar& s : *v) {
            if (!is_numeric(s)) continue;
            const double d = numeric_of(s);
            any = any || (d >= lo && d < hi);
        }
        if (!any) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Segment

Segment::Segment(std::uint32_t id, std::vector<Document> docs)
    : id_(id), docs_(std::move(docs)) {
    // Column store, inverted index and numeric index are built together
    // from the same pass, so they agree by construction.
    std::map<std::string, std::set<std::string>> text_distinct;
    std::map<std::string, std::set<std::uint64_t>> num_distinct;
    for (std::uint32_t ord = 0; ord < docs_.size(); ++ord) {
        for (const auto& [field, values] : docs_[ord].fields) {
            if (field.empty())
                throw EngineError(ErrorCode::InvalidArgument, "empty field name");
            FieldStats& fs = field_stats_[field];
            fs.docs_with_field++;
            fs.max_values_per_doc = std::max(
                fs.max_values_per_doc, static_cast<std::uint32_t>(values.size()));
            for (const Scalar& s : values) {
                fs.kinds |= static_cast<std::uint8_t>(scalar_kind(s));
                if (is_text(s)) {
                    text_postings_[field][std::get<std::string>(s)].push_back(ord);
                    text_distinct[field].insert(std::get<std::string>(s));
                } else {
                    const double d = numeric_of(s);
                    numeric_index_[field].emplace_back(d, ord);
                    std::uint64_t bits;
                    __builtin_memcpy(&bits, &d, sizeof(bits));
                    num_distinct[field].insert(bits);
                }
            }
        }
    }
    for (auto& [field, postings] : text_postings_) {
        for (auto& [term, ords] : postings)
            ords.erase(std::unique(ords.begin(), ords.end()), ords.end());
    }
    for (auto& [field, arr] : numeric_index_) std::sort(arr.begin(), arr.end());
    for (auto& [field, fs] : field_stats_) {
        fs.distinct_values = text_distinct[field].size() + num_distinct[field].size();
    }
    // Columnar layout: offsets + flattened values per field.
    for (const auto& [field, fs] : field_stats_) {
        Column col;
        col.offsets.reserve(docs_.size() + 1);
        col.offsets.push_back(0);
        for (const Document& d : docs_) {
            if (const FieldValue* v = d.find(field))
                col.values.insert(col.values.end(), v->begin(), v->end());
            col.offsets.push_back(static_cast<std::uint32_t>(col.values.size()));
        }
        columns_.emplace(field, std::move(col));
    }
}

std::vector<std::uint32_t> Segment::term_ordinals(const std::string& field,
                                                  const Scalar& value) const {
    if (is_text(value)) {
        auto fit = text_postings_.find(field);
        if (fit == text_postings_.end()) return {};
        auto tit = fit->second.find(std::get<std::string>(value));
        if (tit == fit->second.end()) return {};
        return tit->second;
    }
    auto nit = numeric_index_.find(field);
    if (nit == numeric_index_.end()) return {};
    const double d = numeric_of(value);
    auto lo = std::lower_bound(nit->second.begin(), nit->second.end(),
                               std::make_pair(d, std::uint32_t(0)));
    std::vector<std::uint32_t> out;
    for (auto it = lo; it != nit->second.end() && it->first == d; ++it)
        out.push_back(it->second);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<std::uint32_t> Segment::range_ordinals(const RangeFilter& r) const {
    auto nit = numeric_index_.find(r.field);
    if (nit == numeric_index_.end()) return {};
    auto [lo, hi] = half_open(r);
    if (!(lo < hi)) return {};
    const auto& arr = nit->second;
    auto begin = std::lower_bound(
        arr.begin(), arr.end(), lo,
        [](const auto& p, double v) { return p.first < v; });
    std::vector<std::uint32_t> out;
    for (auto it = begin; it != arr.end() && it->first < hi; ++it)
        out.push_back(it->second);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

void Segment::scan_column(
    const std::string& field,
    const std::function<void(std::uint32_t, const Scalar&)>& fn) const {
    auto cit = columns_.find(field);
    if (cit == columns_.end()) return;
    const Column& col = cit->second;
    for (std::uint32_t ord = 0; ord + 1 < col.offsets.size(); ++ord) {
        for (std::uint32_t i = col.offsets[ord]; i < col.offsets[ord + 1]; ++i)
            fn(ord, col.values[i]);
    }
}

void Segment::scan_column_filtered(
    const std::string& field, const std::vector<std::uint32_t>& ordinals,
    const std::function<void(std::uint32_t, const Scalar&)>& fn) const {
    auto cit = columns_.find(field);
    if (cit == columns_.end()) return;
    const Column& col = cit->second;
    for (std::uint32_t ord : ordinals) {
        for (std::uint32_t i = col.offsets[ord]; i < col.offsets[ord + 1]; ++i)
            fn(ord, col.values[i]);
    }
}

const FieldStats* Segment::field_stats(const std::string& field) const {
    auto it = field_stats_.find(field);
    return it == field_stats_.end() ? nullptr : &it->second;
}

// ---------------------------------------------------------------------------
// Snapshot

const SnapshotIndex& Snapshot::index(const std::string& name) const {
    auto it = indices_.find(name);
    if (it == indices_.end())
        throw EngineError(ErrorCode::UnknownIndex, "index not in snapshot: " + name);
    return it->second;
}

std::map<std::string, std::uint64_t> Snapshot::epoch_vector() const {
    std::map<std::string, std::uint64_t> out;
    for (const auto& [name, idx] : indices_) out[name] = idx.epoch;
    return out;
}

// ---------------------------------------------------------------------------
// Store: mutations

void Store::create_index(const std::string& name, std::uint16_t shard_count,
                         const std::string& routing_field) {
    if (shard_count < 1)
        throw EngineError(ErrorCode::InvalidArgument, "shard_count must be >= 1");
    if (shard_count > 4096)
        throw EngineError(ErrorCode::InvalidArgument, "shard_count exceeds 4096");
    std::unique_lock lock(registry_mutex_);
    if (indices_.count(name))
        throw EngineError(ErrorCode::DuplicateIndex, "index exists: " + name);
    auto state = std::make_unique<IndexState>();
    state->name = name;
    state->shard_count = shard_count;
    state->routing_field = routing_field;
    state->shards.resize(shard_count);
    for (auto& sh : state->shards) {
        sh.open_segment_id = 0;
        sh.next_segment_id = 1;
    }
    indices_.emplace(name, std::move(state));
}

bool Store::has_index(const std::string& name) const {
    std::shared_lock lock(registry_mutex_);
    return indices_.count(name) > 0;
}

std::vector<std::string> Store::index_names() const {
    std::shared_lock lock(registry_mutex_);
    std::vector<std::string> out;
    for (const auto& [name, st] : indices_) out.push_back(name);
    return out;
}

std::uint16_t Store::route_shard(const Scalar& key, std::uint16_t shard_count) {
    const auto kv = to_key(key);
    if (!kv) return 0;
    return shard_for_key(*kv, shard_count);
}

std::vector<GlobalDocId> Store::add_documents(const std::string& index,
                                              const std::vector<Document>& docs) {
    std::shared_lock reg(registry_mutex_);
    auto it = indices_.find(index);
    if (it == indices_.end())
        throw EngineError(ErrorCode::UnknownIndex, "unknown index: " + index);
    IndexState& st = *it->second;
    std::lock_guard write(st.write_mutex);
    std::vector<GlobalDocId> ids;
    ids.reserve(docs.size());
    for (const Document& doc : docs) {
        for (const auto& [field, v] : doc.fields)
            if (field.empty())
                throw EngineError(ErrorCode::InvalidArgument, "empty field name");
        std::uint16_t shard = 0;
        if (const FieldValue* rv = doc.find(st.routing_field); rv && !rv->empty())
            shard = route_shard(rv->front(), st.shard_count);
        else
            shard = route_shard(Scalar(std::string()), st.shard_count);
        Shard& sh = st.shards[shard];
        GlobalDocId id{shard, sh.open_segment_id,
                       static_cast<std::uint32_t>(sh.open_docs.size())};
        sh.open_docs.push_back(doc);
        ids.push_back(id);
    }
    return ids;
}

std::optional<std::uint32_t> Store::seal_segment(const std::string& index,
                                                 std::uint16_t shard) {
    std::shared_lock reg(registry_mutex_);
    auto it = indices_.find(index);
    if (it == indices_.end())
        throw EngineError(ErrorCode::UnknownIndex, "unknown index: " + index);
    IndexState& st = *it->second;
    std::lock_guard write(st.write_mutex);
    if (shard >= st.shard_count)
        throw EngineError(ErrorCode::InvalidArgument, "shard out of range");
    Shard& sh = st.shards[shard];
    if (sh.open_docs.empty()) return std::nullopt;
    const std::uint32_t seg_id = sh.open_segment_id;
    sh.sealed.push_back(
        std::make_shared<const Segment>(seg_id, std::move(sh.open_docs)));
    sh.open_docs.clear();
    sh.open_segment_id = sh.next_segment_id++;
    st.epoch++;
    return seg_id;
}

void Store::seal_all(const std::string& index) {
    const std::uint16_t n = shard_count(index);
    for (std::uint16_t s = 0; s < n; ++s) seal_segment(index, s);
}

std::uint32_t Store::merge_segments(const std::string& index, std::uint16_t shard,
                                    const std::vector<std::uint32_t>& segment_ids) {
    std::shared_lock reg(registry_mutex_);
    auto it = indices_.find(index);
    if (it == indices_.end())
        throw EngineError(ErrorCode::UnknownIndex, "unknown index: " + index);
    IndexState& st = *it->second;
    std::lock_guard write(st.write_mutex);
    if (shard >= st.shard_count)
        throw EngineError(ErrorCode::InvalidArgument, "shard out of range");
    Shard& sh = st.shards[shard];

    std::vector<std::uint32_t> wanted = segment_ids;
    std::sort(wanted.begin(), wanted.end());
    std::vector<SegmentPtr> to_merge;
    for (std::uint32_t id : wanted) {
        auto sit = std::find_if(sh.sealed.begin(), sh.sealed.end(),
                                [id](const SegmentPtr& s) { return s->id() == id; });
        if (sit == sh.sealed.end())
            throw EngineError(ErrorCode::UnsealedSegment,
                              "segment not sealed or unknown: " + std::to_string(id));
        to_merge.push_back(*sit);
    }
    if (to_merge.empty())
        throw EngineError(ErrorCode::InvalidArgument, "no segments to merge");

    // Ordinals reassigned by (old segment asc, old ordinal asc).
    std::vector<Document> merged;
    for (const SegmentPtr& seg : to_merge)
        merged.insert(merged.end(), seg->docs().begin(), seg->docs().end());

    const std::uint32_t new_id = sh.next_segment_id++;
    std::vector<SegmentPtr> remaining;
    for (const SegmentPtr& s : sh.sealed) {
        if (!std::binary_search(wanted.begin(), wanted.end(), s->id()))
            remaining.push_back(s);
    }
    remaining.push_back(std::make_shared<const Segment>(new_id, std::move(merged)));
    sh.sealed = std::move(remaining);
    st.epoch++;
    return new_id;
}

// ---------------------------------------------------------------------------
// Store: snapshots and reads

Snapshot Store::open_snapshot(const std::vector<std::string>& names) const {
    std::shared_lock reg(registry_mutex_);
    Snapshot snap;
    for (const std::string& name : names) {
        auto it = indices_.find(name);
        if (it == indices_.end())
            throw EngineError(ErrorCode::UnknownIndex, "unknown index: " + name);
        const IndexState& st = *it->second;
        std::lock_guard write(st.write_mutex);
        SnapshotIndex si;
        si.shard_count = st.shard_count;
        si.routing_field = st.routing_field;
        si.epoch = st.epoch;
        si.shards.resize(st.shard_count);
        for (std::uint16_t s = 0; s < st.shard_count; ++s) {
            si.shards[s] = st.shards[s].sealed;
            for (const SegmentPtr& seg : si.shards[s]) si.doc_count += seg->doc_count();
        }
        snap.indices_.emplace(name, std::move(si));
    }
    return snap;
}

Snapshot Store::open_snapshot_all() const { return open_snapshot(index_names()); }

std::uint64_t Store::epoch(const std::string& index) const {
    std::shared_lock reg(registry_mutex_);
    auto it = indices_.find(index);
    if (it == indices_.end())
        throw EngineError(ErrorCode::UnknownIndex, "unknown index: " + index);
    std::lock_guard write(it->second->write_mutex);
    return it->second->epoch;
}

std::uint16_t Store::shard_count(const std::string& index) const {
    std::shared_lock reg(registry_mutex_);
    auto it = indices_.find(index);
    if (it == indices_.end())
        throw EngineError(ErrorCode::UnknownIndex, "unknown index: " + index);
    return it->second->shard_count;
}

std::string Store::routing_field(const std::string& index) const {
    std::shared_lock reg(registry_mutex_);
    auto it = indices_.find(index);
    if (it == indices_.end())
        throw EngineError(ErrorCode::UnknownIndex, "unknown index: " + index);
    return it->second->routing_field;
}

const IndexCounters& Store::counters(const std::string& index) const {
    std::shared_lock reg(registry_mutex_);
    auto it = indices_.find(index);
    if (it == indices_.end())
        throw EngineError(ErrorCode::UnknownIndex, "unknown index: " + index);
    return *it->second->counters;
}

std::vector<GlobalDocId> Store::term_lookup(const Snapshot& snap,
                                            const std::string& index,
                                            const std::string& field,
                                            const Scalar& value) const {
    const SnapshotIndex& si = snap.index(index);
    counters(index).term_lookups.fetch_add(1, std::memory_order_relaxed);
    std::vector<GlobalDocId> out;
    for (std::uint16_t s = 0; s < si.shards.size(); ++s) {
        for (const SegmentPtr& seg : si.shards[s]) {
            for (std::uint32_t ord : seg->term_ordinals(field, value))
                out.push_back({s, seg->id(), ord});
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<GlobalDocId> Store::range_lookup(const Snapshot& snap,
                                             const std::string& index,
                                             const RangeFilter& range) const {
    const SnapshotIndex& si = snap.index(index);
    counters(index).range_lookups.fetch_add(1, std::memory_order_relaxed);
    const FieldStats fs = field_stats(snap, index, range.field);
    if (fs.kinds != 0 && !(fs.kinds & (static_cast<std::uint8_t>(ScalarKind::Int) |
                                       static_cast<std::uint8_t>(ScalarKind::Float))))
        throw EngineError(ErrorCode::TypeMismatch,
                          "range over non-numeric field: " + range.field);
    std::vector<GlobalDocId> out;
    for (std::uint16_t s = 0; s < si.shards.size(); ++s) {
        for (const SegmentPtr& seg : si.shards[s]) {
            for (std::uint32_t ord : seg->range_ordinals(range))
                out.push_back({s, seg->id(), ord});
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

void Store::scan_field_column(
    const Snapshot& snap, const std::string& index, const std::string& field,
    const DocBitset* doc_filter,
    const std::function<void(GlobalDocId, const Scalar&)>& fn) const {
    const SnapshotIndex& si = snap.index(index);
    const IndexCounters& ctr = counters(index);
    ctr.column_scans.fetch_add(1, std::memory_order_relaxed);
    std::uint64_t values = 0;
    // One pass over the filter, grouped by (shard, segment).
    std::map<std::pair<std::uint16_t, std::uint32_t>, std::vector<std::uint32_t>> per_seg;
    if (doc_filter) {
        doc_filter->for_each([&](GlobalDocId id) {
            per_seg[{id.shard, id.segment}].push_back(id.ordinal);
        });
    }
    for (std::uint16_t s = 0; s < si.shards.size(); ++s) {
        for (const SegmentPtr& seg : si.shards[s]) {
            const std::uint16_t shard = s;
            const std::uint32_t seg_id = seg->id();
            if (doc_filter) {
                auto it = per_seg.find({shard, seg_id});
                if (it == per_seg.end()) continue;
                seg->scan_column_filtered(field, it->second,
                                          [&](std::uint32_t ord, const Scalar& v) {
                                              ++values;
                                              fn({shard, seg_id, ord}, v);
                                          });
            } else {
                seg->scan_column(field, [&](std::uint32_t ord, const Scalar& v) {
                    ++values;
                    fn({shard, seg_id, ord}, v);
                });
            }
        }
    }
    ctr.scanned_values.fetch_add(values, std::memory_order_relaxed);
}

const SegmentPtr& Store::segment_for(const Snapshot& snap, const std::string& index,
                                     GlobalDocId id) const {
    const SnapshotIndex& si = snap.index(index);
    if (id.shard < si.shards.size()) {
        for (const SegmentPtr& seg : si.shards[id.shard]) {
            if (seg->id() == id.segment) {
                if (id.ordinal >= seg->doc_count())
                    throw EngineError(ErrorCode::StaleHandle, "ordinal out of range");
                return seg;
            }
        }
    }
    throw EngineError(ErrorCode::StaleHandle,
                      "stale document handle: segment not visible in snapshot");
}

std::vector<Document> Store::materialize_docs(
    const Snapshot& snap, const std::string& index,
    const std::vector<GlobalDocId>& ids, const std::vector<std::string>& fields) const {
    std::vector<Document> out;
    out.reserve(ids.size());
    for (GlobalDocId id : ids) {
        const SegmentPtr& seg = segment_for(snap, index, id);
        const Document& src = seg->doc(id.ordinal);
        Document d;
        for (const std::string& f : fields) {
            if (const FieldValue* v = src.find(f)) d.fields[f] = *v;
        }
        out.push_back(std::move(d));
    }
    return out;
}

DocBitset Store::all_docs(const Snapshot& snap, const std::string& index) const {
    const SnapshotIndex& si = snap.index(index);
    DocBitset out;
    for (std::uint16_t s = 0; s < si.shards.size(); ++s) {
        for (const SegmentPtr& seg : si.shards[s]) {
            for (std::uint32_t ord = 0; ord < seg->doc_count(); ++ord)
                out.add({s, seg->id(), ord});
        }
    }
    return out;
}

DocBitset Store::eval_filter(const Snapshot& snap, const std::string& index,
                             const Filter& filter) const {
    if (filter.match_all()) return all_docs(snap, index);
    bool first = true;
    DocBitset acc;
    auto intersect_ids = [&](const std::vector<GlobalDocId>& ids) {
        DocBitset b;
        for (GlobalDocId id : ids) b.add(id);
        acc = first ? std::move(b) : acc.and_with(b);
        first = false;
    };
    for (const auto& t : filter.terms)
        intersect_ids(term_lookup(snap, index, t.field, t.value));
    for (const auto& r : filter.ranges) intersect_ids(range_lookup(snap, index, r));
    return acc;
}

FieldStats Store::field_stats(const Snapshot& snap, const std::string& index,
                              const std::string& field) const {
    const SnapshotIndex& si = snap.index(index);
    FieldStats out;
    std::uint64_t distinct_max = 0;
    for (const auto& shard : si.shards) {
        for (const SegmentPtr& seg : shard) {
            if (const FieldStats* fs = seg->field_stats(field)) {
                out.kinds |= fs->kinds;
                out.max_values_per_doc =
                    std::max(out.max_values_per_doc, fs->max_values_per_doc);
                out.docs_with_field += fs->docs_with_field;
                distinct_max = std::max(distinct_max, fs->distinct_values);
            }
        }
    }
    out.distinct_values = distinct_max;
    return out;
}

}  // namespace hopper::storage
