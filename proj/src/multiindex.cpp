#include "cforms/multiindex.hpp"

#include <map>
#include <mutex>
#include <stdexcept>

namespace cforms {

int popcount(std::uint32_t m) {
#if defined(__GNUC__)
    return __builtin_popcount(m);
#else
    int c = 0;
    while (m) { c += m & 1u; m >>= 1; }
    return c;
#endif
}

DegreeTable::DegreeTable(int n, int k) : n_(n), k_(k) {
    if (n < 0 || n > 20 || k < 0) throw std::invalid_argument("DegreeTable: bad (n,k)");
    pos_of_mask_.assign(std::size_t(1) << n, -1);
    if (k > n) return;
    // lexicographic enumeration of increasing k-tuples
    std::vector<int> tuple(k);
    for (int i = 0; i < k; ++i) tuple[i] = i;
    while (true) {
        std::uint32_t m = 0;
        for (int a : tuple) m |= (1u << a);
        pos_of_mask_[m] = static_cast<int>(masks_.size());
        masks_.push_back(m);
        axes_.push_back(tuple);
        if (k == 0) break;
        int i = k - 1;
        while (i >= 0 && tuple[i] == n - k + i) --i;
        if (i < 0) break;
        ++tuple[i];
        for (int j = i + 1; j < k; ++j) tuple[j] = tuple[j - 1] + 1;
    }
}

const DegreeTable& DegreeTable::get(int n, int k) {
    static std::map<std::pair<int, int>, DegreeTable> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto key = std::make_pair(n, k);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, DegreeTable(n, k)).first;
    return it->second;
}

int merge_sign(std::uint32_t mask_a, std::uint32_t mask_b) {
    // inversions between (A asc, B asc): pairs (a,b) with a in A, b in B, a > b
    int inv = 0;
    for (std::uint32_t b = mask_b; b; b &= b - 1) {
        int bit = __builtin_ctz(b);
        std::uint32_t higher = mask_a >> (bit + 1);
        inv += popcount(higher << (bit + 1));
    }
    return (inv & 1) ? -1 : 1;
}

TupleEval sort_tuple(const std::vector<int>& axes) {
    std::uint32_t mask = 0;
    int sign = 1;
    for (std::size_t i = 0; i < axes.size(); ++i) {
        std::uint32_t bit = 1u << axes[i];
        if (mask & bit) return {0, 0};
        // count already-placed axes greater than this one
        std::uint32_t higher = mask >> (axes[i] + 1);
        if (popcount(higher << (axes[i] + 1)) & 1) sign = -sign;
        mask |= bit;
    }
    return {sign, mask};
}

std::vector<Shuffle> shuffles(std::uint32_t mask, int k) {
    std::vector<Shuffle> out;
    int total = popcount(mask);
    if (k < 0 || k > total) return out;
    // enumerate k-subsets of the set bits
    std::vector<int> bits;
    for (std::uint32_t m = mask; m; m &= m - 1) bits.push_back(__builtin_ctz(m));
    std::vector<int> sel(k);
    for (int i = 0; i < k; ++i) sel[i] = i;
    while (true) {
        std::uint32_t first = 0;
        for (int i : sel) first |= 1u << bits[i];
        std::uint32_t second = mask & ~first;
        out.push_back({first, second, merge_sign(first, second)});
        if (k == 0) break;
        int i = k - 1;
        while (i >= 0 && sel[i] == total - k + i) --i;
        if (i < 0) break;
        ++sel[i];
        for (int j = i + 1; j < k; ++j) sel[j] = sel[j - 1] + 1;
    }
    return out;
}

}  // namespace cforms
