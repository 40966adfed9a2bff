#include "crashlens/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "crashlens/common.hpp"

namespace crashlens::geo {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
// ~0.1 mm at NYC latitude; anything closer to a ring counts as on the boundary.
constexpr double kBoundaryTolDeg = 1e-9;

double cross(const GeoPoint& o, const GeoPoint& a, const GeoPoint& b) {
    return (a.lon - o.lon) * (b.lat - o.lat) - (a.lat - o.lat) * (b.lon - o.lon);
}

bool on_segment(const GeoPoint& p, const GeoPoint& a, const GeoPoint& b) {
    double dx = b.lon - a.lon, dy = b.lat - a.lat;
    double len2 = dx * dx + dy * dy;
    double t = len2 > 0 ? ((p.lon - a.lon) * dx + (p.lat - a.lat) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    double ex = a.lon + t * dx - p.lon, ey = a.lat + t * dy - p.lat;
    return std::hypot(ex, ey) <= kBoundaryTolDeg;
}

enum class RingHit { Outside, Inside, Boundary };

RingHit ring_contains(const GeoPoint& p, const Ring& ring) {
    bool inside = false;
    const std::size_t n = ring.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const GeoPoint& a = ring[i];
        const GeoPoint& b = ring[j];
        if (on_segment(p, a, b)) return RingHit::Boundary;
        if ((a.lat > p.lat) != (b.lat > p.lat)) {
            double x = a.lon + (p.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat);
            if (p.lon < x) inside = !inside;
        }
    }
    return inside ? RingHit::Inside : RingHit::Outside;
}

int sign(double v) { return (v > 0) - (v < 0); }

bool segments_intersect(const GeoPoint& p1, const GeoPoint& p2, const GeoPoint& q1, const GeoPoint& q2) {
    int d1 = sign(cross(q1, q2, p1));
    int d2 = sign(cross(q1, q2, p2));
    int d3 = sign(cross(p1, p2, q1));
    int d4 = sign(cross(p1, p2, q2));
    if (d1 * d2 < 0 && d3 * d4 < 0) return true;
    if (d1 == 0 && on_segment(p1, q1, q2)) return true;
    if (d2 == 0 && on_segment(p2, q1, q2)) return true;
    if (d3 == 0 && on_segment(q1, p1, p2)) return true;
    if (d4 == 0 && on_segment(q2, p1, p2)) return true;
    return false;
}

struct AreaMoments {
    double area = 0.0;  // signed
    double cx = 0.0;    // area-weighted (sum of A*cx)
    double cy = 0.0;
};

AreaMoments ring_moments(const Ring& ring, const GeoPoint& ref) {
    AreaMoments m;
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i) {
        PlanePoint a = project_local(ring[i], ref);
        PlanePoint b = project_local(ring[(i + 1) % n], ref);
        double c = a.x * b.y - b.x * a.y;
        m.area += c;
        m.cx += (a.x + b.x) * c;
        m.cy += (a.y + b.y) * c;
    }
    m.area *= 0.5;
    m.cx /= 6.0;
    m.cy /= 6.0;
    return m;
}

GeoPoint centroid_of(std::span<const PolygonGeom> parts) {
    if (parts.empty() || parts.front().exterior.empty()) {
        throw DataError("polygon_centroid: empty polygon");
    }
    const GeoPoint ref = parts.front().exterior.front();
    double area = 0.0, mx = 0.0, my = 0.0;
    for (const auto& part : parts) {
        // Orientation-independent: exterior adds, holes subtract.
        auto add = [&](const Ring& ring, double s) {
            AreaMoments m = ring_moments(ring, ref);
            double k = (m.area < 0 ? -1.0 : 1.0) * s;
            area += k * m.area;
            mx += k * m.cx;
            my += k * m.cy;
        };
        add(part.exterior, 1.0);
        for (const auto& hole : part.holes) add(hole, -1.0);
    }
    if (!(std::abs(area) > 1e-6)) {
        throw DataError("polygon_centroid: degenerate polygon (zero area)");
    }
    return unproject_local({mx / area, my / area}, ref);
}

}  // namespace

bool is_valid(const GeoPoint& p) {
    return std::isfinite(p.lon) && std::isfinite(p.lat) && p.lon >= -180.0 && p.lon <= 180.0 &&
           p.lat >= -90.0 && p.lat <= 90.0;
}

double great_circle_distance(const GeoPoint& a, const GeoPoint& b) {
    double phi1 = a.lat * kDegToRad, phi2 = b.lat * kDegToRad;
    double dphi = (b.lat - a.lat) * kDegToRad;
    double dlambda = (b.lon - a.lon) * kDegToRad;
    double s1 = std::sin(dphi / 2), s2 = std::sin(dlambda / 2);
    double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
    return 2.0 * kEarthRadiusM * std::asin(std::sqrt(std::min(1.0, h)));
}

bool point_in_polygon(const GeoPoint& p, const PolygonGeom& poly) {
    RingHit ext = ring_contains(p, poly.exterior);
    if (ext == RingHit::Boundary) return true;
    if (ext == RingHit::Outside) return false;
    for (const auto& hole : poly.holes) {
        RingHit h = ring_contains(p, hole);
        if (h == RingHit::Boundary) return true;
        if (h == RingHit::Inside) return false;
    }
    return true;
}

bool point_in_polygon(const GeoPoint& p, const MultiPolygon& parts) {
    return std::any_of(parts.begin(), parts.end(),
                       [&](const PolygonGeom& part) { return point_in_polygon(p, part); });
}

GeoPoint polygon_centroid(const PolygonGeom& poly) { return centroid_of({&poly, 1}); }

GeoPoint polygon_centroid(const MultiPolygon& parts) { return centroid_of(parts); }

PlanePoint project_local(const GeoPoint& p, const GeoPoint& ref) {
    return {kEarthRadiusM * (p.lon - ref.lon) * kDegToRad * std::cos(ref.lat * kDegToRad),
            kEarthRadiusM * (p.lat - ref.lat) * kDegToRad};
}

std::vector<PlanePoint> project_local(std::span<const GeoPoint> points, const GeoPoint& ref) {
    std::vector<PlanePoint> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back(project_local(p, ref));
    return out;
}

GeoPoint unproject_local(const PlanePoint& p, const GeoPoint& ref) {
    return {ref.lon + p.x / (kEarthRadiusM * std::cos(ref.lat * kDegToRad)) / kDegToRad,
            ref.lat + p.y / kEarthRadiusM / kDegToRad};
}

BBox bbox(const MultiPolygon& parts) {
    BBox b{180.0, 90.0, -180.0, -90.0};
    for (const auto& part : parts) {
        for (const auto& v : part.exterior) {
            b.min_lon = std::min(b.min_lon, v.lon);
            b.max_lon = std::max(b.max_lon, v.lon);
            b.min_lat = std::min(b.min_lat, v.lat);
            b.max_lat = std::max(b.max_lat, v.lat);
        }
    }
    return b;
}

Ring normalize_ring(Ring ring) {
    for (const auto& v : ring) {
        if (!is_valid(v)) throw DataError("ring vertex has invalid coordinates");
    }
    if (ring.size() >= 2 && ring.front() == ring.back()) ring.pop_back();
    // Consecutive duplicates carry no geometry.
    ring.erase(std::unique(ring.begin(), ring.end()), ring.end());
    if (ring.size() >= 2 && ring.front() == ring.back()) ring.pop_back();
    if (ring.size() < 3) {
        throw DataError("ring has fewer than 3 distinct vertices");
    }
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i) {
        const GeoPoint& a1 = ring[i];
        const GeoPoint& a2 = ring[(i + 1) % n];
        for (std::size_t j = i + 2; j < n; ++j) {
            if (i == 0 && j == n - 1) continue;  // adjacent through closure
            if (segments_intersect(a1, a2, ring[j], ring[(j + 1) % n])) {
                throw DataError("ring is self-intersecting (segments " + std::to_string(i) + " and " +
                                std::to_string(j) + ")");
            }
        }
    }
    return ring;
}

double ring_area_m2(const Ring& ring, const GeoPoint& ref) { return ring_moments(ring, ref).area; }

}  // namespace crashlens::geo
