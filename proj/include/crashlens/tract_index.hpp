#pragma once

#include <optional>
#include <vector>

#include "crashlens/ingest.hpp"

namespace crashlens {

/// Uniform-grid bounding-box index for point-in-tract queries.
class TractIndex {
public:
    explicit TractIndex(const std::vector<CensusTract>& tracts);

    /// Every tract containing p (boundary inclusive), ascending index order.
    std::vector<std::size_t> containing(const geo::GeoPoint& p) const;

    /// Single owning tract: among all containing tracts, the one with the
    /// lexicographically lowest tract_id.
    std::optional<std::size_t> assign(const geo::GeoPoint& p) const;

private:
    std::size_t cell_of(double lon, double lat) const;

    const std::vector<CensusTract>* tracts_;
    std::vector<geo::BBox> boxes_;
    double min_lon_ = 0, min_lat_ = 0, cell_ = 1;
    std::size_t nx_ = 1, ny_ = 1;
    std::vector<std::vector<std::size_t>> cells_;
};

}  // namespace crashlens
