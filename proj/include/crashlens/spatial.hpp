#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crashlens/ingest.hpp"

namespace crashlens::spatial {

/// Binary, symmetric, irreflexive neighbor structure over n spatial units.
class SpatialWeights {
public:
    SpatialWeights() = default;

    /// Validates symmetry, index range and absence of self-neighbors; sorts
    /// and deduplicates each list. Throws std::invalid_argument.
    static SpatialWeights from_neighbors(std::vector<std::vector<std::size_t>> neighbors);

    std::size_t size() const { return neighbors_.size(); }
    std::span<const std::size_t> neighbors(std::size_t unit) const { return neighbors_[unit]; }
    bool is_neighbor(std::size_t a, std::size_t b) const;
    std::size_t edge_count() const;

private:
    std::vector<std::vector<std::size_t>> neighbors_;
};

/// Units are neighbors iff their boundaries (all rings of all parts) come
/// within `snap_tol_m` meters of each other: shared vertex, shared edge, or
/// a corner touch.
SpatialWeights queen_contiguity(const std::vector<CensusTract>& tracts, double snap_tol_m = 0.5);

/// Queen contiguity of a rows x cols lattice, row-major unit order.
SpatialWeights lattice_queen(std::size_t rows, std::size_t cols);

enum class MoranVariant {
    /// (n-1)(y_j-ybar) * sum_k w_jk (y_k-ybar) / sum_k w_jk (y_k-ybar)^2
    Neighbor,
    /// (y_j-ybar) * sum_k w_jk (y_k-ybar) / m2, m2 = sum_k (y_k-ybar)^2 / (n-1)
    Conventional,
};

std::string_view to_string(MoranVariant v);
MoranVariant parse_moran_variant(std::string_view s);

/// Per-unit statistic; nullopt where it is undefined (no neighbors, or a zero
/// weighted denominator). Throws DataError on length mismatch, fewer than two
/// units, or constant y.
std::vector<std::optional<double>> local_morans_i(std::span<const double> y, const SpatialWeights& w,
                                                  MoranVariant variant = MoranVariant::Neighbor);

enum class Cluster { HH, LL, HL, LH, NotSignificant, Isolated };

std::string_view to_string(Cluster c);

struct MoranConfig {
    std::size_t n_perm = 999;
    double alpha = 0.05;
    std::uint64_t seed = 0;
    MoranVariant variant = MoranVariant::Neighbor;
    unsigned threads = 1;
};

struct MoranResult {
    std::vector<std::optional<double>> I;
    std::vector<double> p_value;
    std::vector<Cluster> cluster;
};

/// Conditional permutation inference. For each unit the own value is held
/// fixed and its neighbor slots are refilled by sampling, without
/// replacement, from the remaining n-1 values. Two-sided pseudo p-value:
/// (#{|I_perm| >= |I_obs|} + 1) / (n_perm + 1).
///
/// Each unit draws from its own RNG stream seeded by (seed, unit_key) and
/// samples from the remaining values in sorted order, so results do not
/// depend on thread count or, when keys are supplied, on unit order. Without
/// keys the unit index is the key.
MoranResult moran_permutation(std::span<const double> y, const SpatialWeights& w, const MoranConfig& cfg,
                              std::span<const std::string> unit_keys = {});

}  // namespace crashlens::spatial
