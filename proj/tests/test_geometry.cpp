#include <doctest.h>

#include "vrdlab/geometry.hpp"
#include "vrdlab/rng.hpp"

using namespace vrd;

namespace {

Box random_valid_box(CounterRng& rng) {
    const double x1 = rng.uniform(-50.0, 50.0);
    const double y1 = rng.uniform(-50.0, 50.0);
    return Box{x1, y1, x1 + rng.uniform(0.5, 40.0), y1 + rng.uniform(0.5, 40.0)};
}

}  // namespace

TEST_CASE("iou on identical, disjoint and overlapping boxes") {
    CHECK(iou(Box{0, 0, 2, 2}, Box{0, 0, 2, 2}) == doctest::Approx(1.0));
    CHECK(iou(Box{0, 0, 1, 1}, Box{2, 2, 3, 3}) == 0.0);
    // inter 2, union 6
    CHECK(iou(Box{0, 0, 2, 2}, Box{1, 0, 3, 2}) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("iou of boxes sharing only an edge is zero") {
    CHECK(iou(Box{0, 0, 1, 1}, Box{1, 0, 2, 1}) == 0.0);
    CHECK(iou(Box{0, 0, 1, 1}, Box{0, 1, 1, 2}) == 0.0);
}

TEST_CASE("iou rejects degenerate boxes") {
    CHECK_THROWS_AS(iou(Box{0, 0, 0, 1}, Box{0, 0, 1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(iou(Box{0, 0, 1, 1}, Box{2, 2, 1, 3}), std::invalid_argument);
}

TEST_CASE("iou symmetry and range on random boxes") {
    CounterRng rng(41);
    for (int t = 0; t < 500; ++t) {
        const Box a = random_valid_box(rng);
        const Box b = random_valid_box(rng);
        const double ab = iou(a, b);
        CHECK(ab == iou(b, a));
        CHECK(ab >= 0.0);
        CHECK(ab <= 1.0);
        CHECK(iou(a, a) == 1.0);
    }
}

TEST_CASE("max_iou_pair") {
    const Box g1{0, 0, 10, 10};
    const Box g2{20, 20, 30, 30};
    CHECK(max_iou_pair(g1, g1, g2) == doctest::Approx(1.0));
    CHECK(max_iou_pair(Box{50, 50, 60, 60}, g1, g2) == 0.0);
    CHECK(max_iou_pair(Box{0, 0, 2, 2}, Box{1, 0, 3, 2}, Box{5, 5, 6, 6}) ==
          doctest::Approx(1.0 / 3.0));
}

TEST_CASE("union_box basics") {
    CHECK(union_box(Box{0, 0, 1, 1}, Box{0, 0, 1, 1}) == Box{0, 0, 1, 1});
    CHECK(union_box(Box{0, 0, 1, 1}, Box{2, 2, 3, 3}) == Box{0, 0, 3, 3});
    CHECK(union_box(Box{0, 0, 2, 2}, Box{1, 1, 3, 4}) == Box{0, 0, 3, 4});
}

TEST_CASE("union_box contains both inputs, commutative, idempotent") {
    CounterRng rng(42);
    for (int t = 0; t < 500; ++t) {
        const Box a = random_valid_box(rng);
        const Box b = random_valid_box(rng);
        const Box u = union_box(a, b);
        CHECK(contains(u, a));
        CHECK(contains(u, b));
        CHECK(u == union_box(b, a));
        CHECK(union_box(u, a) == u);
    }
}
