#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "crashlens/features.hpp"
#include "crashlens/ingest.hpp"

namespace crashlens::synth {

/// Parameters of the synthetic city. Tracts form a rows x cols grid of
/// squares; everything drawn from it is a pure function of `seed`.
struct SyntheticSpec {
    std::size_t grid_rows = 32;
    std::size_t grid_cols = 32;
    double tract_size_m = 500.0;
    geo::GeoPoint origin{-73.95, 40.70};  // south-west corner

    // Tract feature moments (mean, sd) of complexity, street width, bike
    // lanes and node degree.
    std::array<double, 4> feature_mean{30.58, 34.13, 1.47, 3.59};
    std::array<double, 4> feature_sd{39.34, 5.85, 1.35, 0.83};

    // Aggregated target: y = round(max(0, base + scale * (f(s) + field + noise)))
    // with f(s) scaled to unit variance and a field of variance amplitude^2.
    double target_base = 20.0;
    double target_scale = 4.0;
    double spatial_amplitude = 1.0;
    double spatial_lengthscale_m = 3000.0;
    double noise_sd = 1.0;

    // Point table.
    std::size_t n_points = 50000;
    double positive_rate = 0.05;

    // Raw accidents for the file-level generator.
    std::size_t n_accidents = 20000;
    double severe_rate = 0.23;

    std::uint64_t seed = 0;

    std::size_t n_tracts() const { return grid_rows * grid_cols; }
    void validate() const;
};

/// Draws the four tract features: complexity lognormal, width normal, bike
/// lanes gamma, node degree normal, each matched to the spec moments (width
/// and degree clamped to be positive).
std::vector<std::array<double, 4>> draw_tract_features(const SyntheticSpec& spec, std::uint64_t seed);

/// Zero-mean GP sample with an RBF covariance of unit variance, scaled by
/// `amplitude`, at the given points.
std::vector<double> gp_field(std::span<const geo::PlanePoint> points, double lengthscale_m, double amplitude,
                             std::uint64_t seed);

/// Tract centers of the grid in the local plane (meters), row-major.
std::vector<geo::PlanePoint> grid_centroids(const SyntheticSpec& spec);

struct AggregatedSynthetic {
    std::vector<features::AggregatedRow> rows;
    std::vector<double> signal;  // unit-variance feature effect f(s)
    std::vector<double> field;   // planted spatial residual
};

/// Model-ready tract table with a planted feature effect and spatial field.
AggregatedSynthetic generate_aggregated(const SyntheticSpec& spec);

/// Model-ready point table: `n_points` rows with a nonlinear severity
/// boundary whose intercept is solved so that the mean probability equals
/// `positive_rate`.
std::vector<features::PointRow> generate_points(const SyntheticSpec& spec);

struct RawSynthetic {
    std::vector<CensusTract> tracts;
    StreetNetwork network;
    std::vector<AccidentRecord> accidents;
};

/// Input files for the whole workflow: square tracts, a jittered street
/// lattice inside each tract (a few tracts get no streets), and accidents
/// whose severity depends on complexity and a spatial field.
RawSynthetic generate_raw(const SyntheticSpec& spec);

}  // namespace crashlens::synth
