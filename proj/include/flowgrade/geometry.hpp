#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace flowgrade {

struct Point {
    double x = 0;
    double y = 0;
};

/// Axis-aligned rectangle in pixel coordinates, top-left origin.
struct BoundingBox {
    double x = 0;
    double y = 0;
    double w = 0;
    double h = 0;

    double right() const { return x + w; }
    double bottom() const { return y + h; }
    double area() const { return w * h; }
    Point center() const { return {x + w / 2.0, y + h / 2.0}; }

    bool contains(Point p) const {
        return p.x >= x && p.x <= right() && p.y >= y && p.y <= bottom();
    }

    bool operator==(const BoundingBox&) const = default;
};

inline double intersection_area(const BoundingBox& a, const BoundingBox& b) {
    const double w = std::min(a.right(), b.right()) - std::max(a.x, b.x);
    const double h = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
    if (w <= 0 || h <= 0) return 0.0;
    return w * h;
}

inline double iou(const BoundingBox& a, const BoundingBox& b) {
    const double inter = intersection_area(a, b);
    const double uni = a.area() + b.area() - inter;
    if (uni <= 0) return 0.0;
    return inter / uni;
}

/// Clips `box` to `bounds`. Returns a zero-area box when they do not overlap.
inline BoundingBox clip(const BoundingBox& box, const BoundingBox& bounds) {
    const double x0 = std::max(box.x, bounds.x);
    const double y0 = std::max(box.y, bounds.y);
    const double x1 = std::min(box.right(), bounds.right());
    const double y1 = std::min(box.bottom(), bounds.bottom());
    if (x1 <= x0 || y1 <= y0) return {x0, y0, 0, 0};
    return {x0, y0, x1 - x0, y1 - y0};
}

/// Smallest rectangle covering both operands.
inline BoundingBox bbox_union(const BoundingBox& a, const BoundingBox& b) {
    const double x0 = std::min(a.x, b.x);
    const double y0 = std::min(a.y, b.y);
    const double x1 = std::max(a.right(), b.right());
    const double y1 = std::max(a.bottom(), b.bottom());
    return {x0, y0, x1 - x0, y1 - y0};
}

/// Exact area of the union of a rectangle set; overlaps counted once.
/// Plane sweep over x with interval merging along y.
inline double union_area(std::span<const BoundingBox> boxes) {
    std::vector<double> xs;
    xs.reserve(boxes.size() * 2);
    for (const auto& b : boxes) {
        if (b.w <= 0 || b.h <= 0) continue;
        xs.push_back(b.x);
        xs.push_back(b.right());
    }
    if (xs.empty()) return 0.0;
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

    double total = 0.0;
    std::vector<std::pair<double, double>> spans;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        const double x0 = xs[i];
        const double x1 = xs[i + 1];
        spans.clear();
        for (const auto& b : boxes) {
            if (b.w <= 0 || b.h <= 0) continue;
            if (b.x <= x0 && b.right() >= x1) spans.emplace_back(b.y, b.bottom());
        }
        if (spans.empty()) continue;
        std::sort(spans.begin(), spans.end());
        double covered = 0.0;
        double lo = spans.front().first;
        double hi = spans.front().second;
        for (std::size_t j = 1; j < spans.size(); ++j) {
            if (spans[j].first > hi) {
                covered += hi - lo;
                lo = spans[j].first;
                hi = spans[j].second;
            } else {
                hi = std::max(hi, spans[j].second);
            }
        }
        covered += hi - lo;
        total += (x1 - x0) * covered;
    }
    return total;
}

/// Distance from a point to the solid rectangle (0 when inside).
inline double distance_to_rect(Point p, const BoundingBox& r) {
    const double dx = std::max({r.x - p.x, 0.0, p.x - r.right()});
    const double dy = std::max({r.y - p.y, 0.0, p.y - r.bottom()});
    return std::hypot(dx, dy);
}

/// Distance from a point to the rectangle's boundary. For points inside the
/// rectangle this is the distance to the nearest side, so an arrow endpoint
/// that overshoots slightly into a block still attaches to it.
inline double distance_to_boundary(Point p, const BoundingBox& r) {
    if (!r.contains(p)) return distance_to_rect(p, r);
    return std::min({p.x - r.x, r.right() - p.x, p.y - r.y, r.bottom() - p.y});
}

inline double distance_point_segment(Point p, Point a, Point b) {
    const double vx = b.x - a.x;
    const double vy = b.y - a.y;
    const double len2 = vx * vx + vy * vy;
    if (len2 == 0.0) return std::hypot(p.x - a.x, p.y - a.y);
    double t = ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(p.x - (a.x + t * vx), p.y - (a.y + t * vy));
}

inline double distance_to_polyline(Point p, std::span<const Point> poly) {
    if (poly.empty()) return std::numeric_limits<double>::infinity();
    if (poly.size() == 1) return std::hypot(p.x - poly[0].x, p.y - poly[0].y);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < poly.size(); ++i)
        best = std::min(best, distance_point_segment(p, poly[i], poly[i + 1]));
    return best;
}

}  // namespace flowgrade
