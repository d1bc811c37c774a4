#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>
#include <sstream>

#include "frachdg/mesh.hpp"

using namespace frachdg;

TEST_CASE("smallest split: 1x1 unit square") {
    const Mesh m = build_mesh(1, 1, unit_square());
    CHECK(m.n_triangles() == 2);
    CHECK(m.vertices().size() == 4);
    CHECK(m.edges().size() == 5);
    int boundary = 0, interior = 0;
    for (const Edge& e : m.edges())
        (e.is_boundary() ? boundary : interior)++;
    CHECK(boundary == 4);
    CHECK(interior == 1);
}

TEST_CASE("2x3 mesh: counts by enumeration and Euler relation") {
    const Mesh m = build_mesh(2, 3, unit_square());
    CHECK(m.n_triangles() == 12);
    CHECK(m.vertices().size() == 12);
    CHECK(m.edges().size() == 23);

    // enumeration oracle: unique vertex pairs over all triangle sides
    std::set<std::pair<int, int>> sides;
    for (const Triangle& t : m.triangles())
        for (int s = 0; s < 3; ++s)
            sides.insert(std::minmax(t.v[s], t.v[(s + 1) % 3]));
    CHECK(sides.size() == m.edges().size());

    const int V = static_cast<int>(m.vertices().size());
    const int E = static_cast<int>(m.edges().size());
    const int T = m.n_triangles();
    CHECK(V - E + T == 1);
}

TEST_CASE("6x6 mesh matches the h = 1/6 table row") {
    const Mesh m = build_mesh(6, 6, unit_square());
    CHECK(m.cell_h() == Catch::Approx(1.0 / 6.0).epsilon(1e-14));
    CHECK(m.h() == Catch::Approx(std::sqrt(2.0) / 6.0).epsilon(1e-14));
}

TEST_CASE("mesh invariants over assorted sizes") {
    std::mt19937 rng(3);
    std::uniform_int_distribution<int> pick(1, 9);
    for (int trial = 0; trial < 8; ++trial) {
        const int nx = pick(rng), ny = pick(rng);
        const Domain dom(0.0, 2.0, -1.0, 1.5);
        const Mesh m = build_mesh(nx, ny, dom);

        double area = 0.0;
        for (const Triangle& t : m.triangles()) {
            CHECK(t.area > 0.0);
            area += t.area;
        }
        CHECK(area == Catch::Approx(dom.area()).epsilon(1e-12));

        const int V = static_cast<int>(m.vertices().size());
        const int E = static_cast<int>(m.edges().size());
        CHECK(V - E + m.n_triangles() == 1);

        // edge reference counts: interior edges twice, boundary once
        std::map<std::pair<int, int>, int> refs;
        for (const Triangle& t : m.triangles())
            for (int s = 0; s < 3; ++s)
                refs[std::minmax(t.v[s], t.v[(s + 1) % 3])]++;
        for (const Edge& e : m.edges())
            CHECK(refs[std::minmax(e.v0, e.v1)] == (e.is_boundary() ? 1 : 2));

        const Vec2 center{0.5 * (dom.a + dom.b), 0.5 * (dom.c + dom.d)};
        for (const Edge& e : m.edges()) {
            CHECK(std::abs(e.normal.norm() - 1.0) < 1e-14);
            const Vec2 mid = (m.vertex(e.v0) + m.vertex(e.v1)) * 0.5;
            if (e.is_boundary()) {
                CHECK(e.normal.dot(mid - center) > 0.0);
            } else {
                const Vec2 d = m.centroid(e.elem2) - m.centroid(e.elem1);
                CHECK(e.normal.dot(d) > 0.0);
            }
        }
    }
}

TEST_CASE("locate_point basics") {
    const Mesh m = build_mesh(2, 2, unit_square());

    const auto c0 = m.locate(m.centroid(0));
    REQUIRE(c0.has_value());
    CHECK(c0->tri == 0);
    for (double l : c0->bary)
        CHECK(l == Catch::Approx(1.0 / 3.0).epsilon(1e-12));

    CHECK_FALSE(m.locate({-0.1, 0.5}).has_value());
    CHECK_FALSE(m.locate({0.5, 1.2}).has_value());

    // point on the diagonal of cell 0: triangles 0 and 1 share it, id 0 wins
    const auto diag = m.locate({0.25, 0.25});
    REQUIRE(diag.has_value());
    CHECK(diag->tri == 0);

    // point on the vertical edge between cells 0 and 1
    const auto vert = m.locate({0.5, 0.25});
    REQUIRE(vert.has_value());
    CHECK(vert->tri == 0); // lower triangle of cell 0 contains x = 0.5 side

    // domain corner resolves to the smallest adjacent triangle
    const auto corner = m.locate({1.0, 1.0});
    REQUIRE(corner.has_value());
    CHECK(corner->tri == 6);
}

TEST_CASE("locate_point round-trip over random interior points") {
    const Mesh m = build_mesh(4, 3, Domain(0.0, 1.0, 0.0, 2.0));
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    for (int t = 0; t < m.n_triangles(); ++t) {
        for (int trial = 0; trial < 100; ++trial) {
            double l1 = u(rng), l2 = u(rng);
            if (l1 + l2 > 1.0) {
                l1 = 1.0 - l1;
                l2 = 1.0 - l2;
            }
            const Vec2 p = m.from_reference(t, {l1, l2});
            const auto loc = m.locate(p);
            REQUIRE(loc.has_value());
            CHECK(loc->tri == t);
            CHECK(loc->bary[0] + loc->bary[1] + loc->bary[2] ==
                  Catch::Approx(1.0).margin(1e-12));
        }
    }
}

TEST_CASE("ray decomposition: hand-worked 1x1 case") {
    const Mesh m = build_mesh(1, 1, unit_square());
    const auto segs = m.ray_segments(Axis::X, 0.25, 1.0);
    REQUIRE(segs.size() == 2);
    CHECK(segs[0].tri == 1); // upper-left triangle first
    CHECK(segs[0].lo == Catch::Approx(0.0).margin(1e-15));
    CHECK(segs[0].hi == Catch::Approx(0.25).epsilon(1e-13));
    CHECK(segs[1].tri == 0);
    CHECK(segs[1].hi == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("ray decomposition: degenerate and vertical cases") {
    const Mesh m = build_mesh(2, 2, unit_square());

    CHECK(m.ray_segments(Axis::X, 0.3, 0.0).empty());

    const auto segs = m.ray_segments(Axis::Y, 0.6, 1.0);
    REQUIRE(segs.size() == 4);
    double total = 0.0;
    for (const auto& s : segs)
        total += s.hi - s.lo;
    CHECK(total == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(segs[0].tri == 2);
    CHECK(segs[1].tri == 3);
    CHECK(segs[2].tri == 6);
    CHECK(segs[3].tri == 7);

    // transverse exactly on a mesh line is nudged, not fatal
    const auto nudged = m.ray_segments(Axis::X, 0.5, 1.0);
    CHECK_FALSE(nudged.empty());
    double len = 0.0;
    for (const auto& s : nudged)
        len += s.hi - s.lo;
    CHECK(len == Catch::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(m.ray_segments(Axis::X, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(m.ray_segments(Axis::X, 0.3, 1.5), std::invalid_argument);
}

TEST_CASE("ray tiling property over random rays") {
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const Domain dom(0.0, 1.0, 0.0, 1.0);
    const std::vector<std::pair<int, int>> sizes{{1, 1}, {3, 2}, {5, 5}, {7, 4}};
    for (const auto& [nx, ny] : sizes) {
        const Mesh m = build_mesh(nx, ny, dom);
        for (int trial = 0; trial < 2500; ++trial) {
            const Axis axis = (trial % 2 == 0) ? Axis::X : Axis::Y;
            const double tv = 0.001 + 0.998 * u01(rng);
            const double endpoint = u01(rng);
            const auto segs = m.ray_segments(axis, tv, endpoint);
            double pos = axis == Axis::X ? dom.a : dom.c;
            for (const auto& s : segs) {
                CHECK(s.lo == pos); // gapless, overlap-free, exact
                CHECK(s.hi > s.lo);
                pos = s.hi;
                const Vec2 mid = axis == Axis::X ? Vec2{0.5 * (s.lo + s.hi), s.transverse}
                                                 : Vec2{s.transverse, 0.5 * (s.lo + s.hi)};
                const auto loc = m.locate(mid);
                REQUIRE(loc.has_value());
                CHECK(loc->tri == s.tri);
            }
            if (!segs.empty())
                CHECK(pos == Catch::Approx(endpoint).margin(1e-15));
        }
    }
}

TEST_CASE("mesh dump format") {
    const Mesh m = build_mesh(1, 1, unit_square());
    std::ostringstream os;
    m.dump(os);
    std::istringstream is(os.str());
    std::string line;
    int nv = 0, nt = 0, ne = 0;
    while (std::getline(is, line)) {
        REQUIRE_FALSE(line.empty());
        if (line[0] == 'v')
            ++nv;
        else if (line[0] == 't')
            ++nt;
        else if (line[0] == 'e') {
            ++ne;
            CHECK((line.find("interior") != std::string::npos ||
                   line.find("boundary") != std::string::npos));
        }
    }
    CHECK(nv == 4);
    CHECK(nt == 2);
    CHECK(ne == 5);
}
