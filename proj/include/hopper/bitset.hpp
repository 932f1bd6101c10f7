// Compressed document-id set with roaring-style hybrid containers:
// sparse runs of ids live in sorted 16-bit arrays, dense runs flip to
// fixed 8 KiB bitmaps. Keyed by the high 48 bits of the packed id, so
// membership is a binary search plus a container probe.

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "hopper/common.hpp"

namespace hopper {

class DocBitset {
public:
    DocBitset() = default;

    void add(GlobalDocId id) { add_packed(id.packed()); }
    void add_packed(std::uint64_t packed);

    bool contains(GlobalDocId id) const { return contains_packed(id.packed()); }
    bool contains_packed(std::uint64_t packed) const;

    std::uint64_t size() const { return cardinality_; }
    bool empty() const { return cardinality_ == 0; }

    /// Visit all members in ascending GlobalDocId order.
    void for_each(const std::function<void(GlobalDocId)>& fn) const;
    std::vector<GlobalDocId> to_vector() const;

    /// Real memory footprint of the payload, for cache budget accounting.
    std::uint64_t size_bytes() const;

    DocBitset and_with(const DocBitset& other) const;
    DocBitset or_with(const DocBitset& other) const;

    bool is_subset_of(const DocBitset& other) const;

    friend bool operator==(const DocBitset& a, const DocBitset& b);

private:
    static constexpr std::size_t kArrayMax = 4096;   // beyond this, bitmap
    static constexpr std::size_t kBitmapWords = 1024;  // 65536 bits

    struct Container {
        bool is_bitmap = false;
        std::vector<std::uint16_t> array;   // sorted, when !is_bitmap
        std::vector<std::uint64_t> bitmap;  // kBitmapWords, when is_bitmap
        std::uint32_t count = 0;

        bool contains(std::uint16_t low) const;
        void add(std::uint16_t low);  // returns via count change
        void to_bitmap();
        void shrink_if_sparse();
        void for_each(std::uint64_t high,
                      const std::function<void(GlobalDocId)>& fn) const;
        std::uint64_t bytes() const;
    };

    // Sorted by key; binary-searched on probe.
    std::vector<std::pair<std::uint64_t, Container>> containers_;
    std::uint64_t cardinality_ = 0;

    Container* find_container(std::uint64_t high);
    const Container* find_container(std::uint64_t high) const;
    Container& get_or_insert(std::uint64_t high);

    static Container intersect(const Container& a, const Container& b);
    static Container unite(const Container& a, const Container& b);
};

using BitsetPtr = std::shared_ptr<const DocBitset>;

}  // namespace hopper
