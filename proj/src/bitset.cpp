#include "hopper/bitset.hpp"

#include <algorithm>
#include <bit>

namespace hopper {

bool DocBitset::Container::contains(std::uint16_t low) const {
    if (is_bitmap) {
        return (bitmap[low >> 6] >> (low & 63)) & 1u;
    }
    return std::binary_search(array.begin(), array.end(), low);
}

void DocBitset::Container::add(std::uint16_t low) {
    if (is_bitmap) {
        std::uint64_t& w = bitmap[low >> 6];
        const std::uint64_t mask = 1ull << (low & 63);
        if (!(w & mask)) {
            w |= mask;
            ++count;
        }
        return;
    }
    auto it = std::lower_bound(array.begin(), array.end(), low);
    if (it != array.end() && *it == low) return;
    array.insert(it, low);
    ++count;
    if (array.size() > kArrayMax) to_bitmap();
}

void DocBitset::Container::to_bitmap() {
    bitmap.assign(kBitmapWords, 0);
    for (std::uint16_t v : array) bitmap[v >> 6] |= 1ull << (v & 63);
    array.clear();
    array.shrink_to_fit();
    is_bitmap = true;
}

void DocBitset::Container::shrink_if_sparse() {
    if (!is_bitmap || count > kArrayMax) return;
    std::vector<std::uint16_t> out;
    out.reserve(count);
    for (std::size_t w = 0; w < kBitmapWords; ++w) {
        std::uint64_t word = bitmap[w];
        while (word) {
            const int bit = std::countr_zero(word);
            out.push_back(static_cast<std::uint16_t>((w << 6) + bit));
            word &= word - 1;
        }
    }
    array = std::move(out);
    bitmap.clear();
    bitmap.shrink_to_fit();
    is_bitmap = false;
}

void DocBitset::Container::for_each(
    std::uint64_t high, const std::function<void(GlobalDocId)>& fn) const {
    if (is_bitmap) {
        for (std::size_t w = 0; w < kBitmapWords; ++w) {
            std::uint64_t word = bitmap[w];
            while (word) {
                const int bit = std::countr_zero(word);
                fn(GlobalDocId::unpack((high << 16) | (w << 6) | unsigned(bit)));
                word &= word - 1;
            }
        }
    } else {
        for (std::uint16_t v : array) fn(GlobalDocId::unpack((high << 16) | v));
    }
}

std::uint64_t DocBitset::Container::bytes() const {
    if (is_bitmap) return kBitmapWords * 8;
    return array.size() * 2;
}

DocBitset::Container* DocBitset::find_container(std::uint64_t high) {
    auto it = std::lower_bound(
        containers_.begin(), containers_.end(), high,
        [](const auto& c, std::uint64_t h) { return c.first < h; });
    if (it == containers_.end() || it->first != high) return nullptr;
    return &it->second;
}

const DocBitset::Container* DocBitset::find_container(std::uint64_t high) const {
    auto it = std::lower_bound(
        containers_.begin(), containers_.end(), high,
        [](const auto& c, std::uint64_t h) { return c.first < h; });
    if (it == containers_.end() || it->first != high) return nullptr;
    return &it->second;
}

DocBitset::Container& DocBitset::get_or_insert(std::uint64_t high) {
    auto it = std::lower_bound(
        containers_.begin(), containers_.end(), high,
        [](const auto& c, std::uint64_t h) { return c.first < h; });
    if (it == containers_.end() || it->first != high)
        it = containers_.insert(it, {high, Container{}});
    return it->second;
}

void DocBitset::add_packed(std::uint64_t packed) {
    Container& c = get_or_insert(packed >> 16);
    const std::uint32_t before = c.count;
    c.add(static_cast<std::uint16_t>(packed & 0xFFFF));
    cardinality_ += c.count - before;
}

bool DocBitset::contains_packed(std::uint64_t packed) const {
    const Container* c = find_container(packed >> 16);
    return c && c->contains(static_cast<std::uint16_t>(packed & 0xFFFF));
}

void DocBitset::for_each(const std::function<void(GlobalDocId)>& fn) const {
    for (const auto& [high, c] : containers_) c.for_each(high, fn);
}

std::vector<GlobalDocId> DocBitset::to_vector() const {
    std::vector<GlobalDocId> out;
    out.reserve(cardinality_);
    for_each([&](GlobalDocId id) { out.push_back(id); });
    return out;
}

std::uint64_t DocBitset::size_bytes() const {
    std::uint64_t total = 0;
    for (const auto& [high, c] : containers_) total += 8 + c.bytes();
    return total;
}

DocBitset::Container DocBitset::intersect(const Container& a, const Container& b) {
    Container out;
    if (a.is_bitmap && b.is_bitmap) {
        out.is_bitmap = true;
        out.bitmap.resize(kBitmapWords);
        for (std::size_t w = 0; w < kBitmapWords; ++w) {
            out.bitmap[w] = a.bitmap[w] & b.bitmap[w];
            out.count += static_cast<std::uint32_t>(std::popcount(out.bitmap[w]));
        }
        out.shrink_if_sparse();
        return out;
    }
    const Container& arr = a.is_bitmap ? b : a;
    const Container& oth = a.is_bitmap ? a : b;
    if (!oth.is_bitmap) {
        std::set_intersection(arr.array.begin(), arr.array.end(),
                              oth.array.begin(), oth.array.end(),
                              std::back_inserter(out.array));
    } else {
        for (std::uint16_t v : arr.array)
            if (oth.contains(v)) out.array.push_back(v);
    }
    out.count = static_cast<std::uint32_t>(out.array.size());
    return out;
}

DocBitset::Container DocBitset::unite(const Container& a, const Container& b) {
    Container out;
    if (!a.is_bitmap && !b.is_bitmap &&
        a.array.size() + b.array.size() <= kArrayMax) {
        std::set_union(a.array.begin(), a.array.end(), b.array.begin(),
                       b.array.end(), std::back_inserter(out.array));
        out.count = static_cast<std::uint32_t>(out.array.size());
        return out;
    }
    out.is_bitmap = true;
    out.bitmap.assign(kBitmapWords, 0);
    auto absorb = [&out](const Container& c) {
        if (c.is_bitmap) {
            for (std::size_t w = 0; w < kBitmapWords; ++w) out.bitmap[w] |= c.bitmap[w];
        } else {
            for (std::uint16_t v : c.array) out.bitmap[v >> 6] |= 1ull << (v & 63);
        }
    };
    absorb(a);
    absorb(b);
    for (std::size_t w = 0; w < kBitmapWords; ++w)
        out.count += static_cast<std::uint32_t>(std::popcount(out.bitmap[w]));
    out.shrink_if_sparse();
    return out;
}

DocBitset DocBitset::and_with(const DocBitset& other) const {
    DocBitset out;
    auto ia = containers_.begin();
    auto ib = other.containers_.begin();
    while (ia != containers_.end() && ib != other.containers_.end()) {
        if (ia->first < ib->first) {
            ++ia;
        } else if (ib->first < ia->first) {
            ++ib;
        } else {
            Container c = intersect(ia->second, ib->second);
            if (c.count > 0) {
                out.cardinality_ += c.count;
                out.containers_.emplace_back(ia->first, std::move(c));
            }
            ++ia;
            ++ib;
        }
    }
    return out;
}

DocBitset DocBitset::or_with(const DocBitset& other) const {
    DocBitset out;
    auto ia = containers_.begin();
    auto ib = other.containers_.begin();
    auto push = [&out](std::uint64_t high, Container c) {
        out.cardinality_ += c.count;
        out.containers_.emplace_back(high, std::move(c));
    };
    while (ia != containers_.end() || ib != other.containers_.end()) {
        if (ib == other.containers_.end() ||
            (ia != containers_.end() && ia->first < ib->first)) {
            push(ia->first, ia->second);
            ++ia;
        } else if (ia == containers_.end() || ib->first < ia->first) {
            push(ib->first, ib->second);
            ++ib;
        } else {
            push(ia->first, unite(ia->second, ib->second));
            ++ia;
            ++ib;
        }
    }
    return out;
}

bool DocBitset::is_subset_of(const DocBitset& other) const {
    if (cardinality_ > other.cardinality_) return false;
    bool ok = true;
    for_each([&](GlobalDocId id) { ok = ok && other.contains(id); });
    return ok;
}

bool operator==(const DocBitset& a, const DocBitset& b) {
    if (a.cardinality_ != b.cardinality_) return false;
    return a.is_subset_of(b);
}

}  // namespace hopper
