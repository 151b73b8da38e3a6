#include "stpp/core/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace stpp::core {

double Box::area() const {
    const double w = x1 - x0;
    const double h = y1 - y0;
    return (w > 0.0 && h > 0.0) ? w * h : 0.0;
}

std::optional<Box> intersect(const Box& a, const Box& b) {
    Box out{std::max(a.x0, b.x0), std::max(a.y0, b.y0), std::min(a.x1, b.x1), std::min(a.y1, b.y1)};
    if (out.x1 < out.x0 || out.y1 < out.y0) return std::nullopt;
    return out;
}

Box expand_clipped(const Box& b, double delta, const Box& bounds) {
    return Box{std::max(bounds.x0, b.x0 - delta), std::max(bounds.y0, b.y0 - delta),
               std::min(bounds.x1, b.x1 + delta), std::min(bounds.y1, b.y1 + delta)};
}

RegionUnion::RegionUnion(std::vector<Box> boxes, std::vector<Point> excluded)
    : excluded_(std::move(excluded)) {
    boxes_.reserve(boxes.size());
    for (const auto& b : boxes) add_box(b);
}

void RegionUnion::add_box(const Box& b) {
    if (b.has_positive_area()) boxes_.push_back(b);
}

bool RegionUnion::contains(const Point& p) const {
    if (std::find(excluded_.begin(), excluded_.end(), p) != excluded_.end()) return false;
    return std::any_of(boxes_.begin(), boxes_.end(), [&](const Box& b) { return b.contains(p); });
}

namespace {

// Segment tree over compressed y-coordinates storing cover counts and covered length.
class CoverTree {
public:
    explicit CoverTree(std::vector<double> ys) : ys_(std::move(ys)) {
        const std::size_t n = ys_.size() > 1 ? ys_.size() - 1 : 1;
        count_.assign(4 * n, 0);
        covered_.assign(4 * n, 0.0);
        leaves_ = n;
    }

    void update(std::size_t lo, std::size_t hi, int delta) {
        if (lo < hi) update(1, 0, leaves_, lo, hi, delta);
    }

    [[nodiscard]] double covered() const { return covered_[1]; }

private:
    void update(std::size_t node, std::size_t l, std::size_t r, std::size_t lo, std::size_t hi,
                int delta) {
        if (hi <= l || r <= lo) return;
        if (lo <= l && r <= hi) {
            count_[node] += delta;
        } else {
            const std::size_t mid = (l + r) / 2;
            update(2 * node, l, mid, lo, hi, delta);
            update(2 * node + 1, mid, r, lo, hi, delta);
        }
        if (count_[node] > 0) {
            covered_[node] = ys_[r] - ys_[l];
        } else if (r - l == 1) {
            covered_[node] = 0.0;
        } else {
            covered_[node] = covered_[2 * node] + covered_[2 * node + 1];
        }
    }

    std::vector<double> ys_;
    std::vector<int> count_;
    std::vector<double> covered_;
    std::size_t leaves_{1};
};

struct SweepEdge {
    double x;
    std::size_t lo;
    std::size_t hi;
    int delta;
};

std::vector<double> sorted_unique(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

std::size_t index_of(const std::vector<double>& sorted, double value) {
    return static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), value) - sorted.begin());
}

}  // namespace

double union_area(std::span<const Box> boxes) {
    std::vector<double> ys;
    ys.reserve(2 * boxes.size());
    for (const auto& b : boxes) {
        if (!b.has_positive_area()) continue;
        ys.push_back(b.y0);
        ys.push_back(b.y1);
    }
    if (ys.empty()) return 0.0;
    ys = sorted_unique(std::move(ys));

    std::vector<SweepEdge> edges;
    edges.reserve(ys.size());
    for (const auto& b : boxes) {
        if (!b.has_positive_area()) continue;
        const std::size_t lo = index_of(ys, b.y0);
        const std::size_t hi = index_of(ys, b.y1);
        edges.push_back({b.x0, lo, hi, +1});
        edges.push_back({b.x1, lo, hi, -1});
    }
    std::sort(edges.begin(), edges.end(), [](const SweepEdge& a, const SweepEdge& b) {
        return a.x < b.x;
    });

    CoverTree tree(std::move(ys));
    double area = 0.0;
    double prev_x = edges.front().x;
    for (const auto& e : edges) {
        area += tree.covered() * (e.x - prev_x);
        tree.update(e.lo, e.hi, e.delta);
        prev_x = e.x;
    }
    return area;
}

double region_area(const RegionUnion& r) { return union_area(r.boxes()); }

std::vector<Box> intersection_boxes(const RegionUnion& a, const RegionUnion& b) {
    std::vector<Box> out;
    for (const auto& ba : a.boxes()) {
        for (const auto& bb : b.boxes()) {
            if (auto i = intersect(ba, bb); i && i->has_positive_area()) out.push_back(*i);
        }
    }
    return out;
}

double intersection_area(const RegionUnion& a, const RegionUnion& b) {
    const auto boxes = intersection_boxes(a, b);
    return union_area(boxes);
}

double jaccard(const RegionUnion& a, const RegionUnion& b) {
    const double inter = intersection_area(a, b);
    const double uni = region_area(a) + region_area(b) - inter;
    if (uni <= kAreaTolerance) return 1.0;
    return std::clamp(inter / uni, 0.0, 1.0);
}

std::vector<Box> complement_boxes(std::span<const Box> boxes, const Box& bounds) {
    std::vector<double> xs{bounds.x0, bounds.x1};
    std::vector<double> ys{bounds.y0, bounds.y1};
    std::vector<Box> clipped;
    clipped.reserve(boxes.size());
    for (const auto& b : boxes) {
        auto c = intersect(b, bounds);
        if (!c || !c->has_positive_area()) continue;
        clipped.push_back(*c);
        xs.push_back(c->x0);
        xs.push_back(c->x1);
        ys.push_back(c->y0);
        ys.push_back(c->y1);
    }
    xs = sorted_unique(std::move(xs));
    ys = sorted_unique(std::move(ys));
    const std::size_t nx = xs.size() - 1;
    const std::size_t ny = ys.size() - 1;

    // Mark covered cells with a 2-D difference array.
    std::vector<int> diff((nx + 1) * (ny + 1), 0);
    auto at = [&](std::size_t i, std::size_t j) -> int& { return diff[j * (nx + 1) + i]; };
    for (const auto& c : clipped) {
        const std::size_t i0 = index_of(xs, c.x0), i1 = index_of(xs, c.x1);
        const std::size_t j0 = index_of(ys, c.y0), j1 = index_of(ys, c.y1);
        at(i0, j0) += 1;
        at(i1, j0) -= 1;
        at(i0, j1) -= 1;
        at(i1, j1) += 1;
    }
    for (std::size_t j = 0; j <= ny; ++j)
        for (std::size_t i = 1; i <= nx; ++i) at(i, j) += at(i - 1, j);
    for (std::size_t j = 1; j <= ny; ++j)
        for (std::size_t i = 0; i <= nx; ++i) at(i, j) += at(i, j - 1);

    // Emit uncovered runs row by row.
    std::vector<Box> out;
    for (std::size_t j = 0; j < ny; ++j) {
        std::size_t i = 0;
        while (i < nx) {
            if (at(i, j) > 0) {
                ++i;
                continue;
            }
            std::size_t k = i;
            while (k < nx && at(k, j) == 0) ++k;
            Box b{xs[i], ys[j], xs[k], ys[j + 1]};
            if (b.has_positive_area()) out.push_back(b);
            i = k;
        }
    }
    return out;
}

RegionUnion dilate(const RegionUnion& r, double delta, const Box& bounds) {
    RegionUnion out;
    for (const auto& b : r.boxes()) out.add_box(expand_clipped(b, delta, bounds));
    return out;
}

RegionUnion erode(const RegionUnion& r, double delta, const Box& bounds) {
    if (delta <= 0.0) {
        RegionUnion out;
        for (const auto& b : r.boxes())
            if (auto c = intersect(b, bounds)) out.add_box(*c);
        return out;
    }
    const auto outside = complement_boxes(r.boxes(), bounds);
    std::vector<Box> grown;
    grown.reserve(outside.size());
    for (const auto& b : outside) grown.push_back(expand_clipped(b, delta, bounds));
    return RegionUnion(complement_boxes(grown, bounds));
}

}  // namespace stpp::core
