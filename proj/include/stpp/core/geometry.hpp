#pragma once

#include <optional>
#include <span>
#include <vector>

namespace stpp::core {

// Area comparisons and degenerate-box filtering use this absolute tolerance.
inline constexpr double kAreaTolerance = 1e-12;

struct Point {
    double x{0.0};
    double y{0.0};

    friend bool operator==(const Point&, const Point&) = default;
};

// Closed axis-aligned box [x0,x1] x [y0,y1].
struct Box {
    double x0{0.0};
    double y0{0.0};
    double x1{0.0};
    double y1{0.0};

    [[nodiscard]] double width() const { return x1 - x0; }
    [[nodiscard]] double height() const { return y1 - y0; }
    [[nodiscard]] double area() const;
    [[nodiscard]] bool contains(const Point& p) const {
        return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1;
    }
    [[nodiscard]] bool has_positive_area() const { return area() > kAreaTolerance; }

    friend bool operator==(const Box&, const Box&) = default;
};

[[nodiscard]] std::optional<Box> intersect(const Box& a, const Box& b);

// Box expanded by `delta` on every side and clipped to `bounds`.
[[nodiscard]] Box expand_clipped(const Box& b, double delta, const Box& bounds);

// Union of axis-aligned boxes minus a finite set of excluded points.
// Excluded points carry zero area; they only matter for membership tests.
class RegionUnion {
public:
    RegionUnion() = default;
    RegionUnion(std::vector<Box> boxes, std::vector<Point> excluded = {});

    [[nodiscard]] const std::vector<Box>& boxes() const { return boxes_; }
    [[nodiscard]] const std::vector<Point>& excluded() const { return excluded_; }
    [[nodiscard]] bool empty() const { return boxes_.empty(); }

    // True when `p` lies in some box and is not an excluded point.
    [[nodiscard]] bool contains(const Point& p) const;

    // Boxes of zero area are dropped; excluded points outside every box are kept.
    void add_box(const Box& b);
    void add_excluded(const Point& p) { excluded_.push_back(p); }

private:
    std::vector<Box> boxes_;
    std::vector<Point> excluded_;
};

// Exact Lebesgue area of a union of boxes (segment-tree sweep over x).
[[nodiscard]] double union_area(std::span<const Box> boxes);
[[nodiscard]] double region_area(const RegionUnion& r);

// Boxes whose union equals A ∩ B (pairwise intersections).
[[nodiscard]] std::vector<Box> intersection_boxes(const RegionUnion& a, const RegionUnion& b);
[[nodiscard]] double intersection_area(const RegionUnion& a, const RegionUnion& b);

// |A ∩ B| / |A ∪ B|; 1 when both are empty.
[[nodiscard]] double jaccard(const RegionUnion& a, const RegionUnion& b);

// Disjoint boxes covering bounds \ union(boxes).
[[nodiscard]] std::vector<Box> complement_boxes(std::span<const Box> boxes, const Box& bounds);

// Morphological dilation / erosion by the l-infinity ball of radius delta,
// restricted to `bounds`. Excluded points are ignored and not carried over.
[[nodiscard]] RegionUnion dilate(const RegionUnion& r, double delta, const Box& bounds);
[[nodiscard]] RegionUnion erode(const RegionUnion& r, double delta, const Box& bounds);

}  // namespace stpp::core
