#pragma once

#include "onlinekm/error.hpp"

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace onlinekm {

// A d-vector. Streams and loaders validate coordinates into [0,1]^d at
// ingestion; arithmetic here does not re-check the box.
class Point {
public:
    Point() = default;
    explicit Point(std::vector<double> coords) : coords_(std::move(coords)) {}
    Point(std::initializer_list<double> coords) : coords_(coords) {}

    static Point filled(std::size_t d, double value) { return Point(std::vector<double>(d, value)); }

    std::size_t dim() const noexcept { return coords_.size(); }
    double operator[](std::size_t i) const { return coords_[i]; }
    double& operator[](std::size_t i) { return coords_[i]; }
    std::span<const double> coords() const noexcept { return coords_; }
    const std::vector<double>& vec() const noexcept { return coords_; }

    bool in_unit_box() const noexcept {
        return std::all_of(coords_.begin(), coords_.end(), [](double c) { return c >= 0.0 && c <= 1.0; });
    }

    friend bool operator==(const Point&, const Point&) = default;
    friend auto operator<=>(const Point&, const Point&) = default;

private:
    std::vector<double> coords_;
};

struct WeightedPoint {
    Point point;
    double weight = 1.0;
};

// Multiset of exactly k centers; order is the stable tie-break order.
struct CenterSet {
    std::vector<Point> centers;

    std::size_t k() const noexcept { return centers.size(); }
    std::size_t dim() const noexcept { return centers.empty() ? 0 : centers.front().dim(); }

    static CenterSet replicate(const Point& p, std::size_t k) { return CenterSet{std::vector<Point>(k, p)}; }

    // Centers sorted lexicographically; equality of canonical forms is multiset equality.
    CenterSet canonical() const {
        CenterSet out = *this;
        std::sort(out.centers.begin(), out.centers.end());
        return out;
    }

    friend bool operator==(const CenterSet&, const CenterSet&) = default;
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        s += diff * diff;
    }
    return s;
}

inline double squared_distance(const Point& a, const Point& b) noexcept {
    return squared_distance(a.coords(), b.coords());
}

namespace detail {

inline void require_dims(const CenterSet& c, const Point& x) {
    if (c.centers.empty()) throw InvalidInput("center set is empty");
    for (const auto& center : c.centers) {
        if (center.dim() != x.dim()) {
            throw InvalidInput("dimension mismatch: center has d=" + std::to_string(center.dim()) +
                               ", point has d=" + std::to_string(x.dim()));
        }
    }
}

} // namespace detail

// Index of the closest center; ties go to the lowest index.
inline std::size_t nearest_center_index(const CenterSet& c, const Point& x) {
    detail::require_dims(c, x);
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < c.centers.size(); ++i) {
        const double dist = squared_distance(c.centers[i], x);
        if (dist < best_d) {
            best_d = dist;
            best = i;
        }
    }
    return best;
}

// min over centers of the squared Euclidean distance.
inline double loss(const CenterSet& c, const Point& x) {
    detail::require_dims(c, x);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& center : c.centers) best = std::min(best, squared_distance(center, x));
    return best;
}

inline double weighted_loss(const CenterSet& c, std::span<const WeightedPoint> pts) {
    double total = 0.0;
    for (const auto& wp : pts) total += wp.weight * loss(c, wp.point);
    return total;
}

inline double total_loss(const CenterSet& c, std::span<const Point> pts) {
    double total = 0.0;
    for (const auto& p : pts) total += loss(c, p);
    return total;
}

inline Point centroid(std::span<const WeightedPoint> pts) {
    if (pts.empty()) throw InvalidInput("centroid of an empty set");
    const std::size_t d = pts.front().point.dim();
    std::vector<double> acc(d, 0.0);
    double total = 0.0;
    for (const auto& wp : pts) {
        if (wp.point.dim() != d) throw InvalidInput("dimension mismatch in centroid");
        if (wp.weight < 0.0) throw InvalidInput("negative weight in centroid");
        for (std::size_t i = 0; i < d; ++i) acc[i] += wp.weight * wp.point[i];
        total += wp.weight;
    }
    if (!(total > 0.0)) throw InvalidInput("centroid requires positive total weight");
    for (auto& v : acc) v /= total;
    return Point(std::move(acc));
}

inline std::vector<WeightedPoint> unit_weights(std::span<const Point> pts) {
    std::vector<WeightedPoint> out;
    out.reserve(pts.size());
    for (const auto& p : pts) out.push_back({p, 1.0});
    return out;
}

inline void require_in_box(const Point& p, std::size_t d, const std::string& where) {
    if (p.dim() != d) {
        throw InvalidInput(where + ": expected d=" + std::to_string(d) + ", got d=" + std::to_string(p.dim()));
    }
    if (!p.in_unit_box()) throw InvalidInput(where + ": point outside [0,1]^d");
}

// Common surface of every online clusterer: predict from X_{1:t-1}, then observe x_t.
class OnlineAlgorithm {
public:
    virtual ~OnlineAlgorithm() = default;
    virtual CenterSet predict() = 0;
    virtual void observe(const Point& x) = 0;
    // Expected loss of the current randomized prediction on x; deterministic
    // algorithms return the loss of their single prediction.
    virtual double expected_loss(const Point& x) = 0;
    virtual std::string name() const = 0;
};

} // namespace onlinekm
