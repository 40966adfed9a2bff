#pragma once

#include <span>
#include <vector>

namespace crashlens::geo {

inline constexpr double kEarthRadiusM = 6'371'000.0;

/// Longitude/latitude in degrees.
struct GeoPoint {
    double lon = 0.0;
    double lat = 0.0;
    bool operator==(const GeoPoint&) const = default;
};

/// Local planar coordinates in meters (east, north) relative to a reference point.
struct PlanePoint {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const PlanePoint&) const = default;
};

/// Closure is implicit: the first vertex is not repeated at the end.
using Ring = std::vector<GeoPoint>;

struct PolygonGeom {
    Ring exterior;
    std::vector<Ring> holes;
};

/// Union of polygon parts (a Polygon is a one-part MultiPolygon).
using MultiPolygon = std::vector<PolygonGeom>;

struct BBox {
    double min_lon = 0.0, min_lat = 0.0, max_lon = 0.0, max_lat = 0.0;
    bool contains(const GeoPoint& p) const {
        return p.lon >= min_lon && p.lon <= max_lon && p.lat >= min_lat && p.lat <= max_lat;
    }
};

bool is_valid(const GeoPoint& p);

/// Haversine distance on a sphere of radius kEarthRadiusM.
double great_circle_distance(const GeoPoint& a, const GeoPoint& b);

/// Even-odd containment; points inside a hole are outside, points on any
/// ring boundary count as inside.
bool point_in_polygon(const GeoPoint& p, const PolygonGeom& poly);
bool point_in_polygon(const GeoPoint& p, const MultiPolygon& parts);

/// Area-weighted centroid (exterior minus holes, summed over parts), computed
/// in the local equirectangular plane. Throws DataError for zero area.
GeoPoint polygon_centroid(const PolygonGeom& poly);
GeoPoint polygon_centroid(const MultiPolygon& parts);

/// Equirectangular projection around `ref`: x = R*dlon*cos(lat_ref), y = R*dlat.
PlanePoint project_local(const GeoPoint& p, const GeoPoint& ref);
std::vector<PlanePoint> project_local(std::span<const GeoPoint> points, const GeoPoint& ref);
GeoPoint unproject_local(const PlanePoint& p, const GeoPoint& ref);

BBox bbox(const MultiPolygon& parts);

/// Normalizes and checks a ring: drops a repeated closing vertex, requires at
/// least three distinct vertices and no self-intersection. Throws DataError.
Ring normalize_ring(Ring ring);

/// Signed shoelace area of a ring in the local plane (m^2, CCW positive).
double ring_area_m2(const Ring& ring, const GeoPoint& ref);

}  // namespace crashlens::geo
