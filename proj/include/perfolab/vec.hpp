#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace perfolab {

// Spatial routines support dimensions 1..3; unused components stay zero.
inline constexpr int kMaxDim = 3;

using Vec = std::array<double, kMaxDim>;

inline Vec make_vec(double x = 0, double y = 0, double z = 0) { return {x, y, z}; }

inline double dist2(const Vec& a, const Vec& b, int dim) {
    double s = 0;
    for (int d = 0; d < dim; ++d) {
        const double t = a[d] - b[d];
        s += t * t;
    }
    return s;
}

inline double dist(const Vec& a, const Vec& b, int dim) { return std::sqrt(dist2(a, b, dim)); }

inline double norm(const Vec& a, int dim) {
    double s = 0;
    for (int d = 0; d < dim; ++d) s += a[d] * a[d];
    return std::sqrt(s);
}

// Axis-aligned box; the sampling window and the bounding volume of domains.
struct Box {
    int dim = 3;
    Vec lo{};
    Vec hi{};

    static Box centered(int dim, const Vec& half_widths) {
        Box b;
        b.dim = dim;
        for (int d = 0; d < dim; ++d) {
            b.lo[d] = -half_widths[d];
            b.hi[d] = half_widths[d];
        }
        return b;
    }

    double volume() const {
        double v = 1;
        for (int d = 0; d < dim; ++d) v *= hi[d] - lo[d];
        return v;
    }

    bool contains(const Vec& p) const {
        for (int d = 0; d < dim; ++d)
            if (p[d] < lo[d] || p[d] > hi[d]) return false;
        return true;
    }

    Box scaled(double factor) const {
        Box b = *this;
        for (int d = 0; d < dim; ++d) {
            b.lo[d] = lo[d] * factor;
            b.hi[d] = hi[d] * factor;
        }
        return b;
    }

    // true when this box contains the whole of `other`
    bool covers(const Box& other) const {
        for (int d = 0; d < dim; ++d)
            if (other.lo[d] < lo[d] - 1e-12 || other.hi[d] > hi[d] + 1e-12) return false;
        return true;
    }
};

// Uniform-cell hash over a point set.  Cells are addressed by integer
// coordinates packed into a 64-bit key; only occupied cells are stored, so
// arbitrarily small cell sizes are fine.
class SpatialHash {
  public:
    SpatialHash() = default;

    SpatialHash(const std::vector<Vec>& points, int dim, double cell_size)
        : points_(&points), dim_(dim), cell_(cell_size > 0 ? cell_size : 1.0) {
        cells_.reserve(points.size());
        for (std::size_t i = 0; i < points.size(); ++i)
            cells_[key_of(points[i])].push_back(static_cast<int>(i));
    }

    // indices of all points with |p - centre| <= radius (inclusive)
    std::vector<int> query(const Vec& centre, double radius) const {
        std::vector<int> out;
        visit(centre, radius, [&](int i, double) { out.push_back(i); });
        return out;
    }

    // smallest distance from `centre` to a point with index != exclude;
    // +inf when there is none within `radius`.
    double nearest_other(const Vec& centre, double radius, int exclude) const {
        double best = HUGE_VAL;
        visit(centre, radius, [&](int i, double d) {
            if (i != exclude && d < best) best = d;
        });
        return best;
    }

    template <typename F>
    void visit(const Vec& centre, double radius, F&& f) const {
        if (!points_) return;
        const double r2 = radius * radius;
        std::array<std::int64_t, kMaxDim> clo{}, chi{};
        for (int d = 0; d < dim_; ++d) {
            clo[d] = cell_index(centre[d] - radius);
            chi[d] = cell_index(centre[d] + radius);
        }
        std::array<std::int64_t, kMaxDim> c = clo;
        while (true) {
            auto it = cells_.find(pack(c));
            if (it != cells_.end()) {
                for (int i : it->second) {
                    const double d2 = dist2((*points_)[i], centre, dim_);
                    if (d2 <= r2 * (1 + 1e-14) + 1e-300) f(i, std::sqrt(d2));
                }
            }
            int d = 0;
            for (; d < dim_; ++d) {
                if (++c[d] <= chi[d]) break;
                c[d] = clo[d];
            }
            if (d == dim_) break;
        }
    }

  private:
    std::int64_t cell_index(double x) const {
        return static_cast<std::int64_t>(std::floor(x / cell_));
    }
    std::int64_t key_of(const Vec& p) const {
        std::array<std::int64_t, kMaxDim> c{};
        for (int d = 0; d < dim_; ++d) c[d] = cell_index(p[d]);
        return pack(c);
    }
    static std::int64_t pack(const std::array<std::int64_t, kMaxDim>& c) {
        // 21 bits per axis with offset; ample for every window used here
        const std::int64_t m = 1 << 20;
        return ((c[0] + m) << 42) ^ ((c[1] + m) << 21) ^ (c[2] + m);
    }

    const std::vector<Vec>* points_ = nullptr;
    int dim_ = 3;
    double cell_ = 1.0;
    std::unordered_map<std::int64_t, std::vector<int>> cells_;
};

}  // namespace perfolab
