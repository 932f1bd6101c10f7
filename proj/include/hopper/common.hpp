// Core value types shared by every module: scalar field values, global
// document identifiers, join-key normalization, stable hashing, and the
// engine error taxonomy.

#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace hopper {

// ---------------------------------------------------------------------------
// Scalars and field values

/// A single field value: a text token, an integer, or a float.
using Scalar = std::variant<std::string, std::int64_t, double>;

enum class ScalarKind : std::uint8_t { Text = 1, Int = 2, Float = 4 };

inline ScalarKind scalar_kind(const Scalar& s) {
    switch (s.index()) {
        case 0: return ScalarKind::Text;
        case 1: return ScalarKind::Int;
        default: return ScalarKind::Float;
    }
}

inline bool is_text(const Scalar& s) { return s.index() == 0; }
inline bool is_numeric(const Scalar& s) { return s.index() != 0; }

inline double numeric_of(const Scalar& s) {
    if (s.index() == 1) return static_cast<double>(std::get<std::int64_t>(s));
    return std::get<double>(s);
}

/// Field values are multi-valued; insertion order is preserved.
using FieldValue = std::vector<Scalar>;

/// A schema-free document: field name -> values. Sorted map keeps
/// iteration (and thus hashing, serialization) deterministic.
struct Document {
    std::map<std::string, FieldValue> fields;

    const FieldValue* find(std::string_view name) const {
        auto it = fields.find(std::string(name));
        return it == fields.end() ? nullptr : &it->second;
    }
};

// ---------------------------------------------------------------------------
// Global document identifiers

/// Locates a document cluster-wide: (shard, segment, ordinal).
/// Total order equals the packed integer order. Limits: 4096 shards,
/// ~1M segments per shard, 2^32 docs per segment.
struct GlobalDocId {
    std::uint16_t shard = 0;
    std::uint32_t segment = 0;
    std::uint32_t ordinal = 0;

    std::uint64_t packed() const {
        return (static_cast<std::uint64_t>(shard & 0xFFFu) << 52) |
               (static_cast<std::uint64_t>(segment & 0xFFFFFu) << 32) |
               static_cast<std::uint64_t>(ordinal);
    }

    static GlobalDocId unpack(std::uint64_t p) {
        GlobalDocId id;
        id.shard = static_cast<std::uint16_t>((p >> 52) & 0xFFFu);
        id.segment = static_cast<std::uint32_t>((p >> 32) & 0xFFFFFu);
        id.ordinal = static_cast<std::uint32_t>(p & 0xFFFFFFFFu);
        return id;
    }

    friend auto operator<=>(const GlobalDocId& a, const GlobalDocId& b) {
        return a.packed() <=> b.packed();
    }
    friend bool operator==(const GlobalDocId& a, const GlobalDocId& b) {
        return a.packed() == b.packed();
    }
};

// ---------------------------------------------------------------------------
// Join keys
//
// Join conditions are value-set intersections. Text compares as text,
// numerics compare numerically (int 3 == float 3.0); text never compares
// equal to a numeric. KeyValue is the normalized form used in hash tables,
// exchanges and lookup tables.

using KeyValue = std::variant<std::string, double>;

inline std::optional<KeyValue> to_key(const Scalar& s) {
    if (is_text(s)) return KeyValue(std::get<std::string>(s));
    double d = numeric_of(s);
    if (d == 0.0) d = 0.0;  // collapse -0.0
    return KeyValue(d);
}

inline bool is_text(const KeyValue& k) { return k.index() == 0; }

// ---------------------------------------------------------------------------
// Stable hashing (64-bit FNV-1a); routing and partitioning must not vary
// across runs or platforms, so std::hash is out.

inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t seed = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::string_view s) {
    return fnv1a64(s.data(), s.size());
}

/// Canonical byte encoding of a key value, used for hashing and for
/// deterministic ordering across runs.
inline std::string key_encode(const KeyValue& k) {
    if (is_text(k)) {
        std::string out;
        out.reserve(1 + std::get<std::string>(k).size());
        out.push_back('T');
        out += std::get<std::string>(k);
        return out;
    }
    double d = std::get<double>(k);
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(d));
    __builtin_memcpy(&bits, &d, sizeof(bits));
    std::string out(1 + sizeof(bits), '\0');
    out[0] = 'N';
    for (std::size_t i = 0; i < sizeof(bits); ++i)
        out[1 + i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
    return out;
}

inline std::uint64_t key_hash(const KeyValue& k) {
    const std::string enc = key_encode(k);
    return fnv1a64(enc.data(), enc.size());
}

struct KeyValueHash {
    std::size_t operator()(const KeyValue& k) const {
        return static_cast<std::size_t>(key_hash(k));
    }
};

/// The sharding routing function: stable hash of the key, mod shard count.
/// Shared by document routing at ingest and by the routing-join exchange.
inline std::uint16_t shard_for_key(const KeyValue& k, std::uint16_t shard_count) {
    return static_cast<std::uint16_t>(key_hash(k) % shard_count);
}

/// Serialized size of one key value for network byte accounting:
/// 8 bytes for numerics, UTF-8 length for text.
inline std::uint64_t key_wire_size(const KeyValue& k) {
    return is_text(k) ? std::get<std::string>(k).size() : 8;
}

inline std::string scalar_to_string(const Scalar& s) {
    if (is_text(s)) return std::get<std::string>(s);
    if (s.index() == 1) return std::to_string(std::get<std::int64_t>(s));
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", std::get<double>(s));
    return buf;
}

// ---------------------------------------------------------------------------
// Errors

enum class ErrorCode {
    DuplicateIndex,
    UnknownIndex,
    InvalidArgument,
    StaleHandle,
    TypeMismatch,
    UnsealedSegment,
    UnknownLabel,
    UnsupportedFeature,
    BudgetExhausted,
    MissingField,
    UnboundParameter,
};

class EngineError : public std::runtime_error {
public:
    EngineError(ErrorCode code, const std::string& msg)
        : std::runtime_error(msg), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

/// Query text errors carry a source position.
class ParseError : public std::runtime_error {
public:
    ParseError(int line, int column, const std::string& msg)
        : std::runtime_error(msg), line_(line), column_(column) {}
    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

}  // namespace hopper
