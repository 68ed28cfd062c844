#pragma once

#include <stdexcept>

namespace vrd {

// Axis-aligned box in continuous pixel coordinates, corner convention:
// (x1,y1) top-left, (x2,y2) bottom-right. Valid iff strictly positive area.
struct Box {
    double x1 = 0.0;
    double y1 = 0.0;
    double x2 = 0.0;
    double y2 = 0.0;

    double width() const { return x2 - x1; }
    double height() const { return y2 - y1; }
    double area() const { return width() * height(); }
    double center_x() const { return 0.5 * (x1 + x2); }
    double center_y() const { return 0.5 * (y1 + y2); }

    bool valid() const;

    bool operator==(const Box&) const = default;
};

// Intersection over union in [0,1]. Boxes that only share an edge have zero
// intersection area and IoU 0. Throws std::invalid_argument on degenerate
// (zero or negative area) boxes.
double iou(const Box& a, const Box& b);

// max(IoU(b, g1), IoU(b, g2)) — the relationship-membership test kernel.
double max_iou_pair(const Box& b, const Box& g1, const Box& g2);

// Smallest axis-aligned box containing both inputs.
Box union_box(const Box& a, const Box& b);

// true iff inner lies entirely within outer (boundaries inclusive).
bool contains(const Box& outer, const Box& inner);

}  // namespace vrd
