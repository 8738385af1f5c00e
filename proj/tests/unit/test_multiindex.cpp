#include <doctest.h>

#include "cforms/multiindex.hpp"

using namespace cforms;

TEST_CASE("degree table counts and lexicographic order") {
    const DegreeTable& t = DegreeTable::get(4, 2);
    CHECK(t.count() == 6);
    // expected tuple order: (0,1),(0,2),(0,3),(1,2),(1,3),(2,3)
    std::vector<std::vector<int>> expect = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
    for (int p = 0; p < t.count(); ++p) CHECK(t.axes(p) == expect[p]);
    CHECK(DegreeTable::get(6, 3).count() == 20);
    CHECK(DegreeTable::get(3, 0).count() == 1);
}

TEST_CASE("position round-trips masks") {
    const DegreeTable& t = DegreeTable::get(5, 3);
    for (int p = 0; p < t.count(); ++p) CHECK(t.position(t.mask(p)) == p);
}

TEST_CASE("merge sign counts crossings") {
    // A = {0}, B = {1}: already sorted
    CHECK(merge_sign(0b001, 0b010) == 1);
    // A = {1}, B = {0}: one transposition
    CHECK(merge_sign(0b010, 0b001) == -1);
    // A = {2}, B = {0,1}: two crossings
    CHECK(merge_sign(0b100, 0b011) == 1);
}

TEST_CASE("sort_tuple handles repeats and signs") {
    CHECK(sort_tuple({0, 0}).sign == 0);
    TupleEval e = sort_tuple({1, 0});
    CHECK(e.sign == -1);
    CHECK(e.mask == 0b011);
    CHECK(sort_tuple({2, 0, 1}).sign == 1);  // cyclic, even
}

TEST_CASE("shuffles enumerate all splits with shuffle signs") {
    auto sh = shuffles(0b1011, 2);  // axes {0,1,3}
    CHECK(sh.size() == 3);
    for (const auto& s : sh) {
        CHECK(popcount(s.first) == 2);
        CHECK((s.first | s.second) == 0b1011);
        CHECK((s.first & s.second) == 0u);
        CHECK(s.sign == merge_sign(s.first, s.second));
    }
}
