#include <doctest.h>

#include <random>
#include <sstream>

#include "crashlens/network.hpp"
#include "crashlens/synthetic.hpp"

using namespace crashlens;
using namespace crashlens::network;

namespace {

// (cells+1) x (cells+1) lattice of nodes with straight, back-filled edges.
StreetNetwork grid(std::size_t cells, double step = 0.001, geo::GeoPoint o = {-73.95, 40.70}) {
    StreetNetwork net;
    const std::size_t m = cells + 1;
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < m; ++c) {
            net.add_node("n" + std::to_string(r) + "_" + std::to_string(c),
                         {o.lon + step * static_cast<double>(c), o.lat + step * static_cast<double>(r)});
        }
    }
    auto add = [&](std::size_t a, std::size_t b) {
        StreetEdge e;
        e.u = a;
        e.v = b;
        e.length_m = geo::great_circle_distance(net.nodes[a].location, net.nodes[b].location);
        e.length_backfilled = true;
        net.edges.push_back(e);
    };
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < m; ++c) {
            if (c + 1 < m) add(r * m + c, r * m + c + 1);
            if (r + 1 < m) add(r * m + c, (r + 1) * m + c);
        }
    }
    return net;
}

CensusTract box_tract(std::string id, double x0, double y0, double x1, double y1) {
    CensusTract t;
    t.tract_id = std::move(id);
    t.geometry = {geo::PolygonGeom{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}, {}}};
    t.centroid = geo::polygon_centroid(t.geometry);
    return t;
}

}  // namespace

TEST_CASE("2x2 grid has five intersections") {
    auto net = grid(2);
    CHECK(intersection_count(net) == 5);
    auto deg = node_degrees(net);
    CHECK(deg[0] == 2);
    CHECK(deg[1] == 3);
    CHECK(deg[4] == 4);
}

TEST_CASE("straight edges give circuity exactly one") {
    for (std::size_t cells = 1; cells <= 6; ++cells) {
        auto c = circuity(grid(cells, 0.0007 * static_cast<double>(cells)));
        REQUIRE(c);
        CHECK(*c == 1.0);
    }
}

TEST_CASE("circuity is a ratio of sums") {
    auto net = grid(1);
    double chord = 0.0;
    for (auto& e : net.edges) chord += e.length_m;
    net.edges[0].length_m *= 3.0;
    double extra = net.edges[0].length_m * 2.0 / 3.0;
    CHECK(*circuity(net) == doctest::Approx((chord + extra) / chord).epsilon(1e-14));
    CHECK_FALSE(circuity(StreetNetwork{}));
}

TEST_CASE("circuity with coincident endpoints only") {
    StreetNetwork net;
    net.add_node("a", {0, 0});
    net.add_node("b", {0, 0});
    net.edges.push_back({0, 1, 5.0});
    CHECK_THROWS_AS(circuity(net), DataError);
}

TEST_CASE("undirected degree collapses duplicates, directed counts rows") {
    StreetNetwork net;
    for (int i = 0; i < 4; ++i) net.add_node(std::to_string(i), {0.001 * i, 0});
    net.edges = {{0, 1, 1}, {1, 0, 1}, {0, 2, 1}, {0, 3, 1}, {0, 1, 1}};
    auto und = node_degrees(net);
    auto dir = node_degrees(net, true);
    CHECK(und[0] == 3);
    CHECK(und[1] == 1);
    CHECK(dir[0] == 5);
    CHECK(dir[1] == 3);
    CHECK(intersection_count(net) == 1);
    CHECK(intersection_count(net, true) == 2);
    CHECK_THROWS_AS(net.add_node("0", {0, 0}), DataError);
}

TEST_CASE("complexity is intersections times circuity on every summary") {
    synth::SyntheticSpec spec;
    spec.grid_rows = spec.grid_cols = 8;
    spec.seed = 12;
    auto raw = synth::generate_raw(spec);
    auto all = summarize_tracts(raw.network, raw.tracts);
    std::size_t empty = 0;
    for (const auto& s : all.summaries) {
        empty += s.empty;
        if (s.circuity) {
            CHECK(s.complexity == static_cast<double>(s.intersections) * *s.circuity);
        } else {
            CHECK(s.complexity == 0.0);
        }
    }
    CHECK(empty < all.summaries.size());
}

TEST_CASE("indexed summaries equal per-tract clipping") {
    synth::SyntheticSpec spec;
    spec.grid_rows = 5;
    spec.grid_cols = 4;
    spec.seed = 3;
    auto raw = synth::generate_raw(spec);
    for (bool weighted : {false, true}) {
        SummaryOptions opts;
        opts.length_weighted = weighted;
        auto a = summarize_tracts(raw.network, raw.tracts, opts, 1);
        auto b = summarize_tracts(raw.network, raw.tracts, opts, 4);
        CHECK(a.summaries == b.summaries);
        for (std::size_t t = 0; t < raw.tracts.size(); ++t) {
            CHECK(a.summaries[t] == tract_summary(raw.network, raw.tracts[t], opts));
        }
    }
}

TEST_CASE("clipping keeps boundary nodes and drops straddling edges") {
    auto net = grid(2, 0.001, {0, 0});
    auto left = box_tract("L", -0.0005, -0.0005, 0.001, 0.0025);
    auto clipped = clip_network(net, left);
    CHECK(clipped.nodes.size() == 6);
    CHECK(clipped.edges.size() == 7);
    CHECK(clipped.find("n1_1"));
    CHECK_FALSE(clipped.find("n1_2"));

    auto right = box_tract("R", 0.001, -0.0005, 0.0025, 0.0025);
    auto cov = summarize_tracts(net, {left, right}).coverage;
    CHECK(cov.nodes_total == 9);
    CHECK(cov.nodes_outside == 0);
    CHECK(cov.edges_total == 12);
    CHECK(cov.edges_straddling == 0);
    auto far = box_tract("F", 1, 1, 2, 2);
    cov = summarize_tracts(net, {far}).coverage;
    CHECK(cov.nodes_outside == 9);
    CHECK(cov.edges_straddling == 12);
}

TEST_CASE("circuity is invariant under relabeling and edge reordering") {
    auto net = grid(3);
    std::mt19937_64 rng(1);
    for (auto& e : net.edges) e.length_m *= 1.0 + 0.3 * std::uniform_real_distribution<double>()(rng);
    const double c0 = *circuity(net);
    auto shuffled = net;
    std::shuffle(shuffled.edges.begin(), shuffled.edges.end(), rng);
    for (auto& e : shuffled.edges) std::swap(e.u, e.v);
    CHECK(*circuity(shuffled) == doctest::Approx(c0).epsilon(1e-14));
    CHECK(intersection_count(shuffled) == intersection_count(net));
}

TEST_CASE("short measured lengths are flagged, not fatal") {
    auto net = grid(1);
    for (auto& e : net.edges) e.length_m *= 0.9;
    auto s = summarize(net, "t");
    CHECK(s.short_edges);
    CHECK(*s.circuity == doctest::Approx(0.9));
}

TEST_CASE("width and bike lane means, plain and length weighted") {
    StreetNetwork net;
    net.add_node("a", {0, 0});
    net.add_node("b", {0.001, 0});
    net.add_node("c", {0.002, 0});
    StreetEdge e1{0, 1, 100.0}, e2{1, 2, 300.0};
    e1.width_m = 10;
    e2.width_m = 20;
    e1.bike_lanes = 2;
    net.edges = {e1, e2};
    auto plain = summarize(net, "t");
    CHECK(*plain.avg_street_width_m == 15.0);
    CHECK(*plain.avg_bike_lanes == 2.0);
    CHECK(plain.avg_node_degree == doctest::Approx(4.0 / 3.0));
    SummaryOptions w;
    w.length_weighted = true;
    CHECK(*summarize(net, "t", w).avg_street_width_m == 17.5);
    net.edges[0].width_m.reset();
    net.edges[1].width_m.reset();
    CHECK_FALSE(summarize(net, "t").avg_street_width_m);
    auto none = summarize(StreetNetwork{}, "z");
    CHECK(none.empty);
    CHECK(none.complexity == 0.0);
}

TEST_CASE("summary CSV round trip") {
    synth::SyntheticSpec spec;
    spec.grid_rows = spec.grid_cols = 4;
    spec.seed = 9;
    auto raw = synth::generate_raw(spec);
    auto s = summarize_tracts(raw.network, raw.tracts).summaries;
    std::stringstream buf;
    write_summaries(buf, s);
    CHECK(read_summaries(buf) == s);
}
