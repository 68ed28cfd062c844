#include "vrdlab/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace vrd {

bool Box::valid() const {
    return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) &&
           std::isfinite(y2) && x1 < x2 && y1 < y2;
}

namespace {

void require_valid(const Box& b, const char* what) {
    if (!b.valid()) {
        throw std::invalid_argument(std::string(what) + ": degenerate box");
    }
}

}  // namespace

double iou(const Box& a, const Box& b) {
    require_valid(a, "iou");
    require_valid(b, "iou");

    const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
    const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
    if (iw <= 0.0 || ih <= 0.0) return 0.0;

    const double inter = iw * ih;
    const double uni = a.area() + b.area() - inter;
    return inter / uni;
}

double max_iou_pair(const Box& b, const Box& g1, const Box& g2) {
    return std::max(iou(b, g1), iou(b, g2));
}

Box union_box(const Box& a, const Box& b) {
    require_valid(a, "union_box");
    require_valid(b, "union_box");
    return Box{std::min(a.x1, b.x1), std::min(a.y1, b.y1),
               std::max(a.x2, b.x2), std::max(a.y2, b.y2)};
}

bool contains(const Box& outer, const Box& inner) {
    return outer.x1 <= inner.x1 && outer.y1 <= inner.y1 &&
           outer.x2 >= inner.x2 && outer.y2 >= inner.y2;
}

}  // namespace vrd
