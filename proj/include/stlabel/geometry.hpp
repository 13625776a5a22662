#ifndef STLABEL_GEOMETRY_HPP
#define STLABEL_GEOMETRY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace stlabel {

struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
};

struct Pixel {
    int64_t x = 0;
    int64_t y = 0;

    friend bool operator==(const Pixel&, const Pixel&) = default;
    friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

/**
 * Even-odd (crossing number) test of the point against the closed ring.
 * The last vertex is implicitly joined back to the first.
 */
inline bool point_in_polygon(double px, double py, const std::vector<Point>& ring) {
    bool inside = false;
    size_t n = ring.size();
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point& a = ring[j];
        const Point& b = ring[i];
        if ((b.y > py) != (a.y > py)) {
            double xint = b.x + (py - b.y) * (a.x - b.x) / (a.y - b.y);
            if (px < xint) {
                inside = !inside;
            }
        }
    }
    return inside;
}

/**
 * Rasterized polygon interior: pixel (i, j) is included when its center
 * (i + 0.5, j + 0.5) passes the even-odd test. Pixels come out sorted by
 * (y, x). This convention makes area and centroid deterministic and is
 * shared by ingest (centroid/area) and tiling (instance painting).
 */
inline std::vector<Pixel> rasterize_polygon(const std::vector<Point>& ring) {
    std::vector<Pixel> pixels;
    if (ring.size() < 3) {
        return pixels;
    }
    double minx = std::numeric_limits<double>::infinity();
    double maxx = -std::numeric_limits<double>::infinity();
    double miny = minx, maxy = maxx;
    for (const auto& p : ring) {
        minx = std::min(minx, p.x);
        maxx = std::max(maxx, p.x);
        miny = std::min(miny, p.y);
        maxy = std::max(maxy, p.y);
    }
    int64_t x0 = static_cast<int64_t>(std::floor(minx));
    int64_t x1 = static_cast<int64_t>(std::ceil(maxx));
    int64_t y0 = static_cast<int64_t>(std::floor(miny));
    int64_t y1 = static_cast<int64_t>(std::ceil(maxy));
    for (int64_t y = y0; y < y1; ++y) {
        for (int64_t x = x0; x < x1; ++x) {
            if (point_in_polygon(x + 0.5, y + 0.5, ring)) {
                pixels.push_back(Pixel{x, y});
            }
        }
    }
    return pixels;
}

/// Mean of rasterized pixel coordinates; callers must pass a non-empty set.
inline Point pixel_centroid(const std::vector<Pixel>& pixels) {
    double sx = 0.0, sy = 0.0;
    for (const auto& p : pixels) {
        sx += static_cast<double>(p.x);
        sy += static_cast<double>(p.y);
    }
    double n = static_cast<double>(pixels.size());
    return Point{sx / n, sy / n};
}

}

#endif
