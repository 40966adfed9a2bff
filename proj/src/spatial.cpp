#include "crashlens/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "crashlens/common.hpp"

namespace crashlens::spatial {

SpatialWeights SpatialWeights::from_neighbors(std::vector<std::vector<std::size_t>> neighbors) {
    const std::size_t n = neighbors.size();
    for (std::size_t j = 0; j < n; ++j) {
        auto& list = neighbors[j];
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
        for (auto k : list) {
            if (k >= n) throw std::invalid_argument("SpatialWeights: neighbor index out of range");
            if (k == j) throw std::invalid_argument("SpatialWeights: unit listed as its own neighbor");
        }
    }
    for (std::size_t j = 0; j < n; ++j) {
        for (auto k : neighbors[j]) {
            if (!std::binary_search(neighbors[k].begin(), neighbors[k].end(), j)) {
                throw std::invalid_argument("SpatialWeights: asymmetric neighbor relation");
            }
        }
    }
    SpatialWeights w;
    w.neighbors_ = std::move(neighbors);
    return w;
}

bool SpatialWeights::is_neighbor(std::size_t a, std::size_t b) const {
    const auto& list = neighbors_[a];
    return std::binary_search(list.begin(), list.end(), b);
}

std::size_t SpatialWeights::edge_count() const {
    std::size_t total = 0;
    for (const auto& l : neighbors_) total += l.size();
    return total / 2;
}

// ---------------------------------------------------------------------------
// Queen contiguity

namespace {

struct Segment {
    geo::PlanePoint a, b;
    std::size_t unit;
};

double point_segment_distance(const geo::PlanePoint& p, const geo::PlanePoint& a, const geo::PlanePoint& b) {
    double dx = b.x - a.x, dy = b.y - a.y;
    double len2 = dx * dx + dy * dy;
    double t = len2 > 0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(a.x + t * dx - p.x, a.y + t * dy - p.y);
}

double orient(const geo::PlanePoint& o, const geo::PlanePoint& a, const geo::PlanePoint& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

double segment_distance(const Segment& s, const Segment& t) {
    double d1 = orient(t.a, t.b, s.a), d2 = orient(t.a, t.b, s.b);
    double d3 = orient(s.a, s.b, t.a), d4 = orient(s.a, s.b, t.b);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
        return 0.0;
    }
    return std::min({point_segment_distance(s.a, t.a, t.b), point_segment_distance(s.b, t.a, t.b),
                     point_segment_distance(t.a, s.a, s.b), point_segment_distance(t.b, s.a, s.b)});
}

struct CellKey {
    std::int64_t ix, iy;
    bool operator==(const CellKey&) const = default;
};

struct CellHash {
    std::size_t operator()(const CellKey& k) const {
        return std::hash<std::int64_t>{}(k.ix * 73856093LL ^ k.iy * 19349663LL);
    }
};

}  // namespace

SpatialWeights queen_contiguity(const std::vector<CensusTract>& tracts, double snap_tol_m) {
    const std::size_t n = tracts.size();
    std::vector<std::vector<std::size_t>> neighbors(n);
    if (n < 2) return SpatialWeights::from_neighbors(std::move(neighbors));

    geo::GeoPoint ref{0.0, 0.0};
    for (const auto& t : tracts) {
        ref.lon += t.centroid.lon / static_cast<double>(n);
        ref.lat += t.centroid.lat / static_cast<double>(n);
    }

    std::vector<Segment> segments;
    double total_len = 0.0;
    for (std::size_t u = 0; u < n; ++u) {
        for (const auto& part : tracts[u].geometry) {
            auto add_ring = [&](const geo::Ring& ring) {
                for (std::size_t i = 0; i < ring.size(); ++i) {
                    Segment s{geo::project_local(ring[i], ref), geo::project_local(ring[(i + 1) % ring.size()], ref), u};
                    total_len += std::hypot(s.b.x - s.a.x, s.b.y - s.a.y);
                    segments.push_back(s);
                }
            };
            add_ring(part.exterior);
            for (const auto& h : part.holes) add_ring(h);
        }
    }

    const double cell = std::max({total_len / static_cast<double>(segments.size()), 4.0 * snap_tol_m, 1.0});
    std::unordered_map<CellKey, std::vector<std::size_t>, CellHash> grid;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const auto& s = segments[i];
        auto lo_x = static_cast<std::int64_t>(std::floor((std::min(s.a.x, s.b.x) - snap_tol_m) / cell));
        auto hi_x = static_cast<std::int64_t>(std::floor((std::max(s.a.x, s.b.x) + snap_tol_m) / cell));
        auto lo_y = static_cast<std::int64_t>(std::floor((std::min(s.a.y, s.b.y) - snap_tol_m) / cell));
        auto hi_y = static_cast<std::int64_t>(std::floor((std::max(s.a.y, s.b.y) + snap_tol_m) / cell));
        for (auto ix = lo_x; ix <= hi_x; ++ix) {
            for (auto iy = lo_y; iy <= hi_y; ++iy) grid[{ix, iy}].push_back(i);
        }
    }

    std::set<std::pair<std::size_t, std::size_t>> found;
    for (const auto& [key, members] : grid) {
        for (std::size_t a = 0; a < members.size(); ++a) {
            const Segment& s = segments[members[a]];
            for (std::size_t b = a + 1; b < members.size(); ++b) {
                const Segment& t = segments[members[b]];
                if (s.unit == t.unit) continue;
                auto pair = std::minmax(s.unit, t.unit);
                if (found.contains(pair)) continue;
                if (segment_distance(s, t) <= snap_tol_m) found.insert(pair);
            }
        }
    }
    for (const auto& [a, b] : found) {
        neighbors[a].push_back(b);
        neighbors[b].push_back(a);
    }
    return SpatialWeights::from_neighbors(std::move(neighbors));
}

SpatialWeights lattice_queen(std::size_t rows, std::size_t cols) {
    std::vector<std::vector<std::size_t>> neighbors(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            for (int dr = -1; dr <= 1; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    if (dr == 0 && dc == 0) continue;
                    auto rr = static_cast<std::int64_t>(r) + dr;
                    auto cc = static_cast<std::int64_t>(c) + dc;
                    if (rr < 0 || cc < 0 || rr >= static_cast<std::int64_t>(rows) ||
                        cc >= static_cast<std::int64_t>(cols)) {
                        continue;
                    }
                    neighbors[r * cols + c].push_back(static_cast<std::size_t>(rr) * cols + static_cast<std::size_t>(cc));
                }
            }
        }
    }
    return SpatialWeights::from_neighbors(std::move(neighbors));
}

// ---------------------------------------------------------------------------
// Local Moran's I

std::string_view to_string(MoranVariant v) { return v == MoranVariant::Neighbor ? "neighbor" : "conventional"; }

MoranVariant parse_moran_variant(std::string_view s) {
    if (s == "neighbor") return MoranVariant::Neighbor;
    if (s == "conventional") return MoranVariant::Conventional;
    throw UsageError("unknown Moran variant '" + std::string(s) + "' (expected neighbor|conventional)");
}

std::string_view to_string(Cluster c) {
    switch (c) {
        case Cluster::HH: return "HH";
        case Cluster::LL: return "LL";
        case Cluster::HL: return "HL";
        case Cluster::LH: return "LH";
        case Cluster::NotSignificant: return "NotSignificant";
        case Cluster::Isolated: return "Isolated";
    }
    return "?";
}

namespace {

struct Deviations {
    std::vector<double> z;  // n * (y - ybar); both statistics are scale free
    double m2 = 0.0;        // sum z^2 / (n - 1)
};

Deviations deviations(std::span<const double> y, const SpatialWeights& w) {
    if (y.size() != w.size()) {
        throw DataError("Moran: " + std::to_string(y.size()) + " values for " + std::to_string(w.size()) + " units");
    }
    if (y.size() < 2) throw DataError("Moran: need at least 2 units");
    const double n = static_cast<double>(y.size());
    const double total = std::accumulate(y.begin(), y.end(), 0.0);
    Deviations d;
    d.z.reserve(y.size());
    double ss = 0.0;
    for (double v : y) {
        if (!std::isfinite(v)) throw DataError("Moran: non-finite value");
        const double z = n * v - total;
        d.z.push_back(z);
        ss += z * z;
    }
    if (!(ss > 0.0)) throw DataError("Moran: zero variance");
    d.m2 = ss / (n - 1.0);
    return d;
}

std::optional<double> moran_value(double z_j, double s1, double s2, double n, double m2, MoranVariant variant) {
    if (variant == MoranVariant::Neighbor) {
        if (!(s2 > 0.0)) return std::nullopt;
        return (n - 1.0) * z_j / s2 * s1;
    }
    return z_j / m2 * s1;
}

}  // namespace

std::vector<std::optional<double>> local_morans_i(std::span<const double> y, const SpatialWeights& w,
                                                  MoranVariant variant) {
    Deviations d = deviations(y, w);
    const double n = static_cast<double>(y.size());
    std::vector<std::optional<double>> out(y.size());
    for (std::size_t j = 0; j < y.size(); ++j) {
        auto nb = w.neighbors(j);
        if (nb.empty()) continue;
        double s1 = 0.0, s2 = 0.0;
        for (auto k : nb) {
            s1 += d.z[k];
            s2 += d.z[k] * d.z[k];
        }
        out[j] = moran_value(d.z[j], s1, s2, n, d.m2, variant);
    }
    return out;
}

MoranResult moran_permutation(std::span<const double> y, const SpatialWeights& w, const MoranConfig& cfg,
                              std::span<const std::string> unit_keys) {
    if (cfg.n_perm < 99) throw UsageError("Moran: n_perm must be at least 99");
    if (!unit_keys.empty() && unit_keys.size() != y.size()) {
        throw UsageError("Moran: unit key count does not match values");
    }
    Deviations d = deviations(y, w);
    const std::size_t n = y.size();
    const double nd = static_cast<double>(n);

    MoranResult res;
    res.I = local_morans_i(y, w, cfg.variant);
    res.p_value.assign(n, 1.0);
    res.cluster.assign(n, Cluster::NotSignificant);

    std::vector<double> sorted_z = d.z;
    std::sort(sorted_z.begin(), sorted_z.end());

    parallel_for(n, cfg.threads, [&](std::size_t j) {
        auto nb = w.neighbors(j);
        if (nb.empty()) {
            res.cluster[j] = Cluster::Isolated;
            return;
        }
        if (!res.I[j]) return;
        const double observed = std::abs(*res.I[j]);

        // Remaining values in canonical (sorted) order, own value removed once.
        std::vector<double> pool;
        pool.reserve(n - 1);
        bool removed = false;
        for (double v : sorted_z) {
            if (!removed && v == d.z[j]) {
                removed = true;
                continue;
            }
            pool.push_back(v);
        }

        const std::uint64_t stream_seed =
            unit_keys.empty() ? derive_seed(cfg.seed, static_cast<std::uint64_t>(j)) : derive_seed(cfg.seed, unit_keys[j]);
        std::mt19937_64 rng(stream_seed);
        const std::size_t k = nb.size();
        std::size_t extreme = 0;
        for (std::size_t p = 0; p < cfg.n_perm; ++p) {
            double s1 = 0.0, s2 = 0.0;
            // Partial Fisher-Yates: the first k slots become a uniform sample.
            for (std::size_t t = 0; t < k; ++t) {
                std::uniform_int_distribution<std::size_t> pick(t, pool.size() - 1);
                std::swap(pool[t], pool[pick(rng)]);
                s1 += pool[t];
                s2 += pool[t] * pool[t];
            }
            auto value = moran_value(d.z[j], s1, s2, nd, d.m2, cfg.variant);
            if (value && std::abs(*value) >= observed * (1.0 - 1e-12)) ++extreme;
        }
        res.p_value[j] = static_cast<double>(extreme + 1) / static_cast<double>(cfg.n_perm + 1);

        if (res.p_value[j] <= cfg.alpha) {
            double lag = 0.0;
            for (auto kk : nb) lag += d.z[kk];
            bool high = d.z[j] > 0.0;
            bool high_lag = lag > 0.0;
            res.cluster[j] = high ? (high_lag ? Cluster::HH : Cluster::HL) : (high_lag ? Cluster::LH : Cluster::LL);
        }
    });
    return res;
}

}  // namespace crashlens::spatial
