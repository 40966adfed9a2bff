#include "crashlens/tract_index.hpp"

#include <algorithm>
#include <cmath>

namespace crashlens {

TractIndex::TractIndex(const std::vector<CensusTract>& tracts) : tracts_(&tracts) {
    if (tracts.empty()) return;
    boxes_.reserve(tracts.size());
    geo::BBox all{180, 90, -180, -90};
    double span_sum = 0.0;
    for (const auto& t : tracts) {
        auto b = geo::bbox(t.geometry);
        boxes_.push_back(b);
        all.min_lon = std::min(all.min_lon, b.min_lon);
        all.min_lat = std::min(all.min_lat, b.min_lat);
        all.max_lon = std::max(all.max_lon, b.max_lon);
        all.max_lat = std::max(all.max_lat, b.max_lat);
        span_sum += std::max(b.max_lon - b.min_lon, b.max_lat - b.min_lat);
    }
    min_lon_ = all.min_lon;
    min_lat_ = all.min_lat;
    cell_ = std::max(span_sum / static_cast<double>(tracts.size()), 1e-9);
    nx_ = static_cast<std::size_t>((all.max_lon - all.min_lon) / cell_) + 1;
    ny_ = static_cast<std::size_t>((all.max_lat - all.min_lat) / cell_) + 1;
    // Guard against pathological extents (a few tracts far apart).
    while (nx_ * ny_ > 4'000'000) {
        cell_ *= 2;
        nx_ = static_cast<std::size_t>((all.max_lon - all.min_lon) / cell_) + 1;
        ny_ = static_cast<std::size_t>((all.max_lat - all.min_lat) / cell_) + 1;
    }
    cells_.resize(nx_ * ny_);
    for (std::size_t t = 0; t < boxes_.size(); ++t) {
        const auto& b = boxes_[t];
        auto x0 = static_cast<std::size_t>((b.min_lon - min_lon_) / cell_);
        auto x1 = static_cast<std::size_t>((b.max_lon - min_lon_) / cell_);
        auto y0 = static_cast<std::size_t>((b.min_lat - min_lat_) / cell_);
        auto y1 = static_cast<std::size_t>((b.max_lat - min_lat_) / cell_);
        for (auto x = x0; x <= std::min(x1, nx_ - 1); ++x) {
            for (auto y = y0; y <= std::min(y1, ny_ - 1); ++y) cells_[y * nx_ + x].push_back(t);
        }
    }
}

std::size_t TractIndex::cell_of(double lon, double lat) const {
    auto x = static_cast<std::size_t>((lon - min_lon_) / cell_);
    auto y = static_cast<std::size_t>((lat - min_lat_) / cell_);
    return y * nx_ + x;
}

std::vector<std::size_t> TractIndex::containing(const geo::GeoPoint& p) const {
    std::vector<std::size_t> out;
    if (cells_.empty() || p.lon < min_lon_ || p.lat < min_lat_) return out;
    auto x = static_cast<std::size_t>((p.lon - min_lon_) / cell_);
    auto y = static_cast<std::size_t>((p.lat - min_lat_) / cell_);
    if (x >= nx_ || y >= ny_) return out;
    for (auto t : cells_[cell_of(p.lon, p.lat)]) {
        if (boxes_[t].contains(p) && geo::point_in_polygon(p, (*tracts_)[t].geometry)) out.push_back(t);
    }
    return out;
}

std::optional<std::size_t> TractIndex::assign(const geo::GeoPoint& p) const {
    auto hits = containing(p);
    if (hits.empty()) return std::nullopt;
    return *std::min_element(hits.begin(), hits.end(), [&](std::size_t a, std::size_t b) {
        return (*tracts_)[a].tract_id < (*tracts_)[b].tract_id;
    });
}

}  // namespace crashlens
