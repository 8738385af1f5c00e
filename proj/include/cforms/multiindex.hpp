#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace cforms {

// Increasing multi-indices I = (i_1 < ... < i_k) over axes {0,...,n-1},
// stored as bitmasks. Positions follow lexicographic order of the index
// tuples, which is the on-disk ordering for form coefficients.
class DegreeTable {
public:
    DegreeTable(int n, int k);

    int n() const { return n_; }
    int k() const { return k_; }
    int count() const { return static_cast<int>(masks_.size()); }

    std::uint32_t mask(int pos) const { return masks_[pos]; }
    // -1 for masks of the wrong popcount.
    int position(std::uint32_t mask) const { return pos_of_mask_[mask]; }

    const std::vector<int>& axes(int pos) const { return axes_[pos]; }

    static const DegreeTable& get(int n, int k);

private:
    int n_, k_;
    std::vector<std::uint32_t> masks_;
    std::vector<std::vector<int>> axes_;
    std::vector<int> pos_of_mask_;
};

int popcount(std::uint32_t m);

// Sign of the permutation sorting the concatenation (A ascending, B
// ascending) into ascending order. A and B must be disjoint.
int merge_sign(std::uint32_t mask_a, std::uint32_t mask_b);

// Evaluation of an antisymmetric object on an arbitrary axis tuple:
// returns {sign, mask} with sign = 0 for repeated axes.
struct TupleEval {
    int sign;
    std::uint32_t mask;
};
TupleEval sort_tuple(const std::vector<int>& axes);

// All sub-masks of `mask` with `k` bits set, paired with the shuffle sign
// sign(I, mask \ I). Enumeration order is deterministic.
struct Shuffle {
    std::uint32_t first;
    std::uint32_t second;
    int sign;
};
std::vector<Shuffle> shuffles(std::uint32_t mask, int k);

}  // namespace cforms
