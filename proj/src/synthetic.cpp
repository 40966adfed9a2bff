#include "crashlens/synthetic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "crashlens/common.hpp"
#include "crashlens/gbm.hpp"

namespace crashlens::synth {

namespace {

using features::kVehicleCategoryCount;
using features::VehicleCategory;

std::string numbered(const char* prefix, std::size_t i, int width) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
    return buf;
}

void standardize(std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    double sd = std::sqrt(ss / n);
    for (double& x : v) x = sd > 0 ? (x - mean) / sd : 0.0;
}

// Intercept b with mean(sigmoid(b + g)) == rate, by bisection.
double solve_intercept(const std::vector<double>& g, double rate) {
    double lo = -30.0, hi = 30.0;
    for (int it = 0; it < 200; ++it) {
        double mid = (lo + hi) / 2.0, mean = 0.0;
        for (double v : g) mean += learn::sigmoid(mid + v);
        mean /= static_cast<double>(g.size());
        (mean < rate ? lo : hi) = mid;
    }
    return (lo + hi) / 2.0;
}

std::discrete_distribution<int> hour_distribution() {
    // Evening-heavy with a quiet early morning.
    std::vector<double> w(24);
    for (int h = 0; h < 24; ++h) {
        w[static_cast<std::size_t>(h)] = 0.4 + std::exp(-(h - 17.0) * (h - 17.0) / 18.0) + 0.3 * (h >= 7 && h <= 20);
    }
    return {w.begin(), w.end()};
}

std::discrete_distribution<int> dow_distribution() { return {1.1, 1.1, 1.1, 1.1, 1.2, 0.9, 0.8}; }

bool is_night(int hour) { return hour >= 22 || hour <= 4; }

}  // namespace

void SyntheticSpec::validate() const {
    if (grid_rows == 0 || grid_cols == 0) throw UsageError("synth: grid dimensions must be positive");
    if (!(tract_size_m > 0)) throw UsageError("synth.tract_size_m must be > 0");
    if (!(spatial_lengthscale_m > 0)) throw UsageError("synth.spatial_lengthscale_m must be > 0");
    if (!(spatial_amplitude >= 0) || !(noise_sd >= 0)) throw UsageError("synth: amplitude and noise must be >= 0");
    if (!(positive_rate > 0 && positive_rate < 1)) throw UsageError("synth.positive_rate must be in (0, 1)");
    if (!(severe_rate > 0 && severe_rate < 1)) throw UsageError("synth.severe_rate must be in (0, 1)");
    for (std::size_t i = 0; i < 4; ++i) {
        if (!(feature_mean[i] > 0) || !(feature_sd[i] > 0)) throw UsageError("synth: feature moments must be > 0");
    }
}

std::vector<std::array<double, 4>> draw_tract_features(const SyntheticSpec& spec, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const double cv = spec.feature_sd[0] / spec.feature_mean[0];
    const double s2 = std::log(1.0 + cv * cv);
    std::lognormal_distribution<double> complexity(std::log(spec.feature_mean[0]) - s2 / 2.0, std::sqrt(s2));
    std::normal_distribution<double> width(spec.feature_mean[1], spec.feature_sd[1]);
    const double shape = (spec.feature_mean[2] / spec.feature_sd[2]) * (spec.feature_mean[2] / spec.feature_sd[2]);
    std::gamma_distribution<double> bike(shape, spec.feature_sd[2] * spec.feature_sd[2] / spec.feature_mean[2]);
    std::normal_distribution<double> degree(spec.feature_mean[3], spec.feature_sd[3]);

    std::vector<std::array<double, 4>> out(spec.n_tracts());
    for (auto& f : out) {
        f[0] = complexity(rng);
        f[1] = std::max(1.0, width(rng));
        f[2] = bike(rng);
        f[3] = std::max(1.0, degree(rng));
    }
    return out;
}

std::vector<double> gp_field(std::span<const geo::PlanePoint> points, double lengthscale_m, double amplitude,
                             std::uint64_t seed) {
    const auto n = static_cast<Eigen::Index>(points.size());
    std::vector<double> out(points.size(), 0.0);
    if (n == 0 || amplitude == 0.0) return out;
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const auto& a = points[static_cast<std::size_t>(i)];
            const auto& b = points[static_cast<std::size_t>(j)];
            double d2 = (a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y);
            K(i, j) = K(j, i) = std::exp(-d2 / (2.0 * lengthscale_m * lengthscale_m));
        }
    }
    double jitter = 1e-8;
    Eigen::LLT<Eigen::MatrixXd> llt;
    for (;; jitter *= 10.0) {
        Eigen::MatrixXd M = K;
        M.diagonal().array() += jitter;
        llt.compute(M);
        if (llt.info() == Eigen::Success) break;
        if (jitter > 1e-2) throw DataError("synth: field covariance is not positive definite");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i) w[i] = z(rng);
    Eigen::VectorXd f = llt.matrixL() * w;
    for (Eigen::Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = amplitude * f[i];
    return out;
}

std::vector<geo::PlanePoint> grid_centroids(const SyntheticSpec& spec) {
    std::vector<geo::PlanePoint> out;
    out.reserve(spec.n_tracts());
    const double cx = static_cast<double>(spec.grid_cols) * spec.tract_size_m / 2.0;
    const double cy = static_cast<double>(spec.grid_rows) * spec.tract_size_m / 2.0;
    for (std::size_t r = 0; r < spec.grid_rows; ++r) {
        for (std::size_t c = 0; c < spec.grid_cols; ++c) {
            out.push_back({(static_cast<double>(c) + 0.5) * spec.tract_size_m - cx,
                           (static_cast<double>(r) + 0.5) * spec.tract_size_m - cy});
        }
    }
    return out;
}

AggregatedSynthetic generate_aggregated(const SyntheticSpec& spec) {
    spec.validate();
    const std::size_t n = spec.n_tracts();
    auto feats = draw_tract_features(spec, derive_seed(spec.seed, "features"));
    auto cents = grid_centroids(spec);

    AggregatedSynthetic out;
    out.signal.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = feats[i];
        out.signal[i] = std::log1p(s[0]) + 0.35 * std::tanh((s[1] - spec.feature_mean[1]) / spec.feature_sd[1]) +
                        0.15 * std::sqrt(s[2]) - 0.1 * (s[3] - spec.feature_mean[3]) * (s[3] - spec.feature_mean[3]);
    }
    standardize(out.signal);
    out.field = gp_field(cents, spec.spatial_lengthscale_m, spec.spatial_amplitude, derive_seed(spec.seed, "field"));

    std::mt19937_64 rng(derive_seed(spec.seed, "noise"));
    std::normal_distribution<double> noise(0.0, 1.0);
    out.rows.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double mu = spec.target_base +
                    spec.target_scale * (out.signal[i] + out.field[i] + spec.noise_sd * noise(rng));
        auto& row = out.rows[i];
        row.tract_id = numbered("T", i, 5);
        row.s = feats[i];
        row.centroid = cents[i];
        row.y = std::llround(std::max(0.0, mu));
    }
    return out;
}

std::vector<features::PointRow> generate_points(const SyntheticSpec& spec) {
    spec.validate();
    auto feats = draw_tract_features(spec, derive_seed(spec.seed, "features"));
    std::mt19937_64 rng(derive_seed(spec.seed, "points"));
    std::uniform_int_distribution<std::size_t> tract(0, feats.size() - 1);
    auto hour = hour_distribution();
    auto dow = dow_distribution();
    // car, two_wheeler, truck, bus, taxi, bicycle, other
    std::discrete_distribution<int> primary{60, 7, 9, 3, 10, 5, 6};
    std::discrete_distribution<int> secondary{75, 3, 8, 3, 8, 2, 1};
    std::bernoulli_distribution has_second(0.45);

    std::vector<features::PointRow> rows(spec.n_points);
    std::vector<double> g(spec.n_points);
    for (std::size_t i = 0; i < spec.n_points; ++i) {
        auto& r = rows[i];
        auto t = tract(rng);
        r.id = numbered("P", i, 6);
        r.tract_id = numbered("T", t, 5);
        r.s = feats[t];
        r.hour = hour(rng);
        r.day_of_week = dow(rng);
        r.vehicles[static_cast<std::size_t>(primary(rng))] = 1;
        if (has_second(rng)) r.vehicles[static_cast<std::size_t>(secondary(rng))] = 1;

        // Planted boundary: strong vehicle effects, a night bump in the hour
        // (non-monotone), interactions with street width and weekends, and a
        // threshold on complexity.
        const bool night = is_night(r.hour);
        const bool weekend = r.day_of_week >= 5;
        const auto& v = r.vehicles;
        const double lc = std::log1p(r.s[0]);
        double x = 1.5 * v[1] + 0.9 * v[5] + 0.5 * v[2] - 0.3 * v[4];
        x += 1.3 * night + 0.7 * (night && weekend);
        x += 1.1 * (v[2] && r.s[1] < spec.feature_mean[1] - 2.0);
        x += 0.9 * (lc > 3.6) - 0.5 * (lc < 2.3);
        x += 0.8 * (v[1] && r.hour >= 15 && r.hour <= 20);
        x += 0.25 * (r.s[3] - spec.feature_mean[3]) / spec.feature_sd[3];
        g[i] = x;
    }
    const double b0 = solve_intercept(g, spec.positive_rate);
    std::mt19937_64 lrng(derive_seed(spec.seed, "labels"));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < spec.n_points; ++i) rows[i].label = u(lrng) < learn::sigmoid(b0 + g[i]) ? 1 : 0;
    return rows;
}

RawSynthetic generate_raw(const SyntheticSpec& spec) {
    spec.validate();
    const std::size_t n = spec.n_tracts();
    const geo::GeoPoint ref = spec.origin;
    const double size = spec.tract_size_m;
    auto feats = draw_tract_features(spec, derive_seed(spec.seed, "features"));
    RawSynthetic out;

    // Shared corner vertices so neighboring squares touch exactly.
    auto corner = [&](std::size_t r, std::size_t c) {
        return geo::unproject_local({static_cast<double>(c) * size, static_cast<double>(r) * size}, ref);
    };
    std::vector<geo::PlanePoint> centers;
    for (std::size_t r = 0; r < spec.grid_rows; ++r) {
        for (std::size_t c = 0; c < spec.grid_cols; ++c) {
            CensusTract t;
            t.tract_id = numbered("T", r * spec.grid_cols + c, 5);
            geo::PolygonGeom poly;
            poly.exterior = {corner(r, c), corner(r, c + 1), corner(r + 1, c + 1), corner(r + 1, c)};
            t.geometry.push_back(std::move(poly));
            t.centroid = geo::polygon_centroid(t.geometry);
            out.tracts.push_back(std::move(t));
            centers.push_back({(static_cast<double>(c) + 0.5) * size, (static_cast<double>(r) + 0.5) * size});
        }
    }

    std::mt19937_64 rng(derive_seed(spec.seed, "network"));
    std::uniform_int_distribution<int> lattice(2, 7);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::bernoulli_distribution no_streets(0.03), missing_length(0.1), missing_width(0.05);
    std::vector<double> tract_complexity(n, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        if (no_streets(rng)) continue;
        const int m = lattice(rng);
        const double inset = 0.1 * size, step = 0.8 * size / (m - 1);
        const double bend = 0.4 * unit(rng);  // tract-level circuity excess
        const double x0 = centers[t].x - size / 2.0 + inset, y0 = centers[t].y - size / 2.0 + inset;
        std::normal_distribution<double> width(feats[t][1], 2.0);
        std::poisson_distribution<int> bikes(feats[t][2]);
        std::vector<std::size_t> id(static_cast<std::size_t>(m * m));
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) {
                geo::PlanePoint p{x0 + j * step + (unit(rng) - 0.5) * 0.1 * step,
                                  y0 + i * step + (unit(rng) - 0.5) * 0.1 * step};
                id[static_cast<std::size_t>(i * m + j)] = out.network.add_node(
                    out.tracts[t].tract_id + "_" + std::to_string(i) + "_" + std::to_string(j),
                    geo::unproject_local(p, ref));
            }
        }
        auto add_edge = [&](std::size_t a, std::size_t b) {
            StreetEdge e;
            e.u = a;
            e.v = b;
            double chord = geo::great_circle_distance(out.network.nodes[a].location, out.network.nodes[b].location);
            if (missing_length(rng)) {
                e.length_m = chord;
                e.length_backfilled = true;
            } else {
                e.length_m = chord * (1.0 + bend * unit(rng));
            }
            if (!missing_width(rng)) e.width_m = std::max(3.0, width(rng));
            e.bike_lanes = bikes(rng);
            out.network.edges.push_back(e);
        };
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) {
                auto k = static_cast<std::size_t>(i * m + j);
                if (j + 1 < m) add_edge(id[k], id[k + 1]);
                if (i + 1 < m) add_edge(id[k], id[k + static_cast<std::size_t>(m)]);
            }
        }
        tract_complexity[t] = (m - 2.0) * (m - 2.0) + 4.0 * (m - 2.0);
    }

    auto field = gp_field(centers, spec.spatial_lengthscale_m, spec.spatial_amplitude, derive_seed(spec.seed, "field"));
    std::vector<double> risk(n), weight(n);
    for (std::size_t t = 0; t < n; ++t) {
        risk[t] = 0.04 * tract_complexity[t] + field[t];
        weight[t] = 1.0 + tract_complexity[t] / 10.0;
    }

    static const char* const kVehicles[] = {"Sedan", "Station Wagon/Sport Utility Vehicle", "MOTORCYCLE",
                                            "Pick-up Truck", "Box Truck", "Bus", "Taxi", "Bike", "E-Scooter",
                                            "Ambulance"};
    std::discrete_distribution<int> vehicle{40, 30, 5, 5, 4, 3, 7, 4, 1, 1};
    std::discrete_distribution<std::size_t> where(weight.begin(), weight.end());
    std::uniform_int_distribution<int> day_of_year(0, 364), minute(0, 59), n_vehicles(1, 3);
    auto hour = hour_distribution();

    std::mt19937_64 arng(derive_seed(spec.seed, "accidents"));
    std::vector<double> g(spec.n_accidents);
    out.accidents.resize(spec.n_accidents);
    for (std::size_t i = 0; i < spec.n_accidents; ++i) {
        auto& a = out.accidents[i];
        auto t = where(arng);
        a.id = numbered("A", i, 7);
        geo::PlanePoint p{centers[t].x + (unit(arng) - 0.5) * 0.98 * size, centers[t].y + (unit(arng) - 0.5) * 0.98 * size};
        a.location = geo::unproject_local(p, ref);
        std::chrono::sys_days day = std::chrono::year{2019} / std::chrono::January / 1;
        std::chrono::year_month_day ymd{day + std::chrono::days{day_of_year(arng)}};
        a.timestamp = {static_cast<int>(ymd.year()), static_cast<int>(static_cast<unsigned>(ymd.month())),
                       static_cast<int>(static_cast<unsigned>(ymd.day())), hour(arng), minute(arng)};
        bool two_wheeler = false;
        for (int k = n_vehicles(arng); k > 0; --k) {
            int v = vehicle(arng);
            two_wheeler |= v == 2 || v == 8;
            a.vehicle_types.emplace_back(kVehicles[v]);
        }
        g[i] = risk[t] + 1.2 * two_wheeler + 0.8 * is_night(a.timestamp.hour);
    }
    const double b0 = solve_intercept(g, spec.severe_rate);
    std::bernoulli_distribution killed(0.03);
    std::poisson_distribution<int> extra(0.4);
    for (std::size_t i = 0; i < spec.n_accidents; ++i) {
        auto& a = out.accidents[i];
        if (unit(arng) < learn::sigmoid(b0 + g[i])) {
            a.killed = killed(arng);
            a.injured = (a.killed ? 0 : 1) + extra(arng);
        }
    }
    return out;
}

}  // namespace crashlens::synth
