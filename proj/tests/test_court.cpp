#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <random>

#include "ppgroup/court.hpp"

using namespace ppgroup;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& contents)
        : path("tmp_court_" + std::to_string(std::rand()) + ".csv")
    {
        std::ofstream out(path);
        out << contents;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

} // namespace

TEST_CASE("header-only file parses to an empty map")
{
    TempFile f("label,x,y\n");
    const auto result = parse_shot_csv(f.path, Domain{});
    CHECK(result.patterns.empty());
    CHECK(result.rejected == 0);
}

TEST_CASE("single row binds one point")
{
    TempFile f("label,x,y\ncapela,5.0,25.0\n");
    const auto result = parse_shot_csv(f.path, Domain{});
    REQUIRE(result.patterns.count("capela") == 1);
    const auto& pat = result.patterns.at("capela");
    CHECK(pat.size() == 1);
    CHECK(pat.points[0].x == doctest::Approx(5.0));
    CHECK(pat.points[0].y == doctest::Approx(25.0));
    CHECK(result.rejected == 0);
}

TEST_CASE("out-of-domain rows are rejected, not clamped")
{
    TempFile f("label,x,y\np,60.0,25.0\n");
    const auto result = parse_shot_csv(f.path, Domain{});
    CHECK(result.patterns.empty());
    CHECK(result.rejected == 1);
}

TEST_CASE("malformed rows raise errors naming the line")
{
    SUBCASE("wrong arity")
    {
        TempFile f("label,x,y\np,1.0\n");
        CHECK_THROWS_WITH_AS(parse_shot_csv(f.path, Domain{}),
                             doctest::Contains(":2"), InputError);
    }
    SUBCASE("non-numeric coordinate")
    {
        TempFile f("label,x,y\nok,1.0,2.0\nbad,xyz,2.0\n");
        CHECK_THROWS_WITH_AS(parse_shot_csv(f.path, Domain{}),
                             doctest::Contains(":3"), InputError);
    }
    SUBCASE("missing file")
    {
        CHECK_THROWS_AS(parse_shot_csv("no_such_file.csv", Domain{}), InputError);
    }
}

TEST_CASE("extra columns are ignored")
{
    TempFile f("label,x,y,made\np,10.0,20.0,1\n");
    const auto result = parse_shot_csv(f.path, Domain{});
    CHECK(result.patterns.at("p").size() == 1);
}

TEST_CASE("minimum-attempts filter drops sparse labels")
{
    TempFile f("label,x,y\na,1,1\na,2,2\nb,3,3\n");
    const auto result = parse_shot_csv(f.path, Domain{}, 2);
    CHECK(result.patterns.count("a") == 1);
    CHECK(result.patterns.count("b") == 0);
}

TEST_CASE("binning puts a point in the cell that contains it")
{
    GridSpec spec;
    spec.nx = 4;
    spec.ny = 5;
    PointPattern pat{"p", {{spec.dx() / 2, spec.dy() / 2}}}; // center of cell 0
    const CountGrid grid = bin_counts(pat, spec);
    CHECK(grid.counts[0] == 1);
    CHECK(grid.total() == 1);
}

TEST_CASE("binning boundary ties go right/upper; max edges to the last cell")
{
    GridSpec spec;
    spec.domain = {0, 4, 0, 4};
    spec.nx = 4;
    spec.ny = 4;
    CHECK(spec.cell_index({1.0, 0.5}) == 1);  // shared x edge -> right cell
    CHECK(spec.cell_index({0.5, 1.0}) == 4);  // shared y edge -> upper cell
    CHECK(spec.cell_index({4.0, 4.0}) == 15); // domain max corner -> last cell
    CHECK_THROWS_AS(spec.cell_index({4.0001, 1.0}), InputError);
}

TEST_CASE("binning conserves mass and ignores point order")
{
    std::mt19937_64 rng(31);
    GridSpec spec;
    spec.nx = 10;
    spec.ny = 10;
    std::uniform_real_distribution<double> ux(0.0, 47.0), uy(0.0, 50.0);
    PointPattern pat{"p", {}};
    for (int i = 0; i < 257; ++i) pat.points.push_back({ux(rng), uy(rng)});

    const CountGrid a = bin_counts(pat, spec);
    CHECK(a.total() == 257);

    std::shuffle(pat.points.begin(), pat.points.end(), rng);
    const CountGrid b = bin_counts(pat, spec);
    CHECK(a.counts == b.counts);
}

TEST_CASE("uniform points spread evenly over cells")
{
    // Monte Carlo check: each cell's count stays within 5 standard errors of
    // N / (nx ny) under uniform sampling.
    std::mt19937_64 rng(1234);
    GridSpec spec;
    spec.nx = 10;
    spec.ny = 10;
    const int n = 1000;
    std::uniform_real_distribution<double> ux(0.0, 47.0), uy(0.0, 50.0);
    PointPattern pat{"p", {}};
    for (int i = 0; i < n; ++i) pat.points.push_back({ux(rng), uy(rng)});

    const CountGrid grid = bin_counts(pat, spec);
    CHECK(grid.total() == n);
    const double p = 1.0 / spec.cells();
    const double mean = n * p;
    const double se = std::sqrt(n * p * (1.0 - p));
    for (long c : grid.counts) CHECK(std::abs(c - mean) <= 5.0 * se);
}

TEST_CASE("binning a point outside the domain is a hard error")
{
    GridSpec spec;
    PointPattern pat{"p", {{100.0, 0.0}}};
    CHECK_THROWS_AS(bin_counts(pat, spec), InputError);
}

TEST_CASE("write then parse round-trips patterns exactly")
{
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> ux(0.0, 47.0), uy(0.0, 50.0);
    std::vector<PointPattern> pats(2);
    pats[0].label = "alpha";
    pats[1].label = "beta";
    for (int i = 0; i < 53; ++i) pats[i % 2].points.push_back({ux(rng), uy(rng)});

    TempFile f("");
    write_shot_csv(f.path, pats);
    const auto parsed = parse_shot_csv(f.path, Domain{});
    REQUIRE(parsed.patterns.size() == 2);
    for (const auto& pat : pats) {
        const auto& got = parsed.patterns.at(pat.label);
        REQUIRE(got.size() == pat.size());
        for (std::size_t i = 0; i < pat.size(); ++i) {
            CHECK(got.points[i].x == pat.points[i].x);
            CHECK(got.points[i].y == pat.points[i].y);
        }
    }
}

TEST_CASE("domain and grid invariants are enforced")
{
    Domain bad{10, 5, 0, 50};
    CHECK_THROWS_AS(bad.validate(), InputError);
    GridSpec spec;
    spec.nx = 0;
    CHECK_THROWS_AS(spec.validate(), InputError);
    GridSpec ok;
    CHECK(ok.cells() == 2350);
    CHECK(ok.cell_area() == doctest::Approx(1.0));
}
