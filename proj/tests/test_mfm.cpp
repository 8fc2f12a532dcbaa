#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "ppgroup/mfm.hpp"

#include "oracles.hpp"

using namespace ppgroup;

namespace {

MfmPriors unit_priors(double mu0 = 0.0)
{
    MfmPriors p;
    p.mu0 = mu0;
    return p;
}

TransformedSimilarity random_similarity(int n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(1.0, 0.6);
    TransformedSimilarity S;
    S.S = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) S.S(i, j) = S.S(j, i) = gauss(rng);
    return S;
}

// Block-structured similarities with a large within/between gap.
TransformedSimilarity blocky_similarity(const std::vector<int>& labels,
                                        std::uint64_t seed)
{
    const int n = static_cast<int>(labels.size());
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> jitter(0.0, 0.02);
    TransformedSimilarity S;
    S.S = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double base = labels[i] == labels[j] ? 3.0 : 0.5;
            S.S(i, j) = S.S(j, i) = base + jitter(rng);
        }
    return S;
}

} // namespace

// --------------------------------------------------------------------------
// V_n coefficients
// --------------------------------------------------------------------------

TEST_CASE("V_1(1) equals 1/gamma")
{
    MfmPriors p = unit_priors();
    const VnTable t1 = compute_log_vn(1, p);
    CHECK(t1.log_vn[0] == doctest::Approx(0.0).epsilon(1e-12));

    p.gamma = 2.0;
    const VnTable t2 = compute_log_vn(1, p);
    CHECK(t2.log_vn[0] == doctest::Approx(std::log(0.5)).epsilon(1e-12));
}

TEST_CASE("small-n tables match the direct series")
{
    const MfmPriors p = unit_priors();
    for (int n : {2, 3, 5, 8}) {
        const VnTable table = compute_log_vn(n, p);
        for (int w = 1; w <= n; ++w) {
            const double oracle = oracles::vn_series_direct(n, w, p.gamma, 400);
            CHECK(table.log_vn[w - 1] ==
                  doctest::Approx(std::log(oracle)).epsilon(1e-10));
        }
    }
}

TEST_CASE("two series truncations agree for n up to 200")
{
    const MfmPriors p = unit_priors();
    const int n = 200;
    const VnTable table = compute_log_vn(n, p);
    for (int w = 1; w <= n; ++w) {
        const double short_cap = oracles::vn_series_log(n, w, p.gamma, 500);
        const double long_cap = oracles::vn_series_log(n, w, p.gamma, 5000);
        CHECK(std::abs(short_cap - long_cap) <= 1e-10);
        CHECK(table.log_vn[w - 1] == doctest::Approx(short_cap).epsilon(1e-9));
    }
}

TEST_CASE("coefficients stay finite and ratio-bounded")
{
    const MfmPriors p = unit_priors();
    const int n = 50;
    const VnTable table = compute_log_vn(n, p);
    for (int w = 1; w <= n; ++w) CHECK(std::isfinite(table.log_vn[w - 1]));
    for (int w = 1; w < n; ++w)
        CHECK(table.log_ratio(w) < std::log(p.gamma * n));
    CHECK_THROWS_AS(table.log_ratio(0), InputError);
    CHECK_THROWS_AS(table.log_ratio(n), InputError);
}

// --------------------------------------------------------------------------
// Conjugate block draws
// --------------------------------------------------------------------------

TEST_CASE("empty block precision draws from the prior")
{
    MfmPriors p = unit_priors();
    p.alpha = 2.0;
    p.beta = 3.0;
    Rng rng = make_rng(12);
    const int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i)
        sum += sample_block_precision(BlockStats{}, p, rng);
    const double mean = sum / n;
    const double expect = p.alpha / p.beta;
    const double se = std::sqrt(p.alpha / (p.beta * p.beta) / n);
    CHECK(std::abs(mean - expect) <= 3.0 * se);
}

TEST_CASE("block {0,1} posterior has shape 2 and rate 4/3")
{
    const MfmPriors p = unit_priors(0.0);
    const BlockStats stats = make_block_stats({0.0, 1.0});
    CHECK(stats.count == 2);
    CHECK(stats.mean == doctest::Approx(0.5));
    CHECK(stats.var == doctest::Approx(0.5));

    Rng rng = make_rng(77);
    const int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += sample_block_precision(stats, p, rng);
    const double mean = sum / n;
    const double shape = 2.0, rate = 4.0 / 3.0;
    const double se = std::sqrt(shape / (rate * rate) / n);
    CHECK(std::abs(mean - shape / rate) <= 3.0 * se);
}

TEST_CASE("empty block mean draws from N(mu0, 1/(k0 T))")
{
    MfmPriors p = unit_priors(0.7);
    p.k0 = 2.0;
    const double T = 5.0;
    Rng rng = make_rng(4);
    const int n = 100000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = sample_block_mean(BlockStats{}, T, p, rng);
        sum += v;
        sq += v * v;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    const double true_var = 1.0 / (p.k0 * T);
    CHECK(std::abs(mean - 0.7) <= 3.0 * std::sqrt(true_var / n));
    CHECK(std::abs(var - true_var) <= 4.0 * true_var * std::sqrt(2.0 / n));
}

TEST_CASE("block {0,1} mean centers at 1/3 with precision 3T")
{
    const MfmPriors p = unit_priors(0.0);
    const BlockStats stats = make_block_stats({0.0, 1.0});
    const double T = 4.0;
    Rng rng = make_rng(41);
    const int n = 100000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = sample_block_mean(stats, T, p, rng);
        sum += v;
        sq += v * v;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    const double true_var = 1.0 / (3.0 * T);
    CHECK(std::abs(mean - 1.0 / 3.0) <= 3.0 * std::sqrt(true_var / n));
    CHECK(std::abs(var - true_var) <= 4.0 * true_var * std::sqrt(2.0 / n));
}

// --------------------------------------------------------------------------
// Row marginal against quadrature
// --------------------------------------------------------------------------

TEST_CASE("row marginal of a lone pattern is an empty product")
{
    TransformedSimilarity S;
    S.S = Eigen::MatrixXd::Zero(1, 1);
    CHECK(log_marginal_row(S, {1}, 0, unit_priors()) == 0.0);
}

TEST_CASE("single-entry block matches 2-D quadrature")
{
    MfmPriors p = unit_priors(0.4);
    p.alpha = 1.3;
    p.beta = 0.9;
    p.k0 = 1.5;

    TransformedSimilarity S;
    S.S = Eigen::MatrixXd::Zero(2, 2);
    S.S(0, 1) = S.S(1, 0) = 0.8;
    const double log_m = log_marginal_row(S, {1, 1}, 0, p);
    const double oracle = oracles::quadrature_log_marginal({0.8}, p);
    CHECK(std::abs(log_m - oracle) < 1e-6);
}

TEST_CASE("two-entry block matches 2-D quadrature")
{
    const MfmPriors p = unit_priors(1.0);
    TransformedSimilarity S;
    S.S = Eigen::MatrixXd::Zero(3, 3);
    S.S(0, 1) = S.S(1, 0) = 0.3;
    S.S(0, 2) = S.S(2, 0) = 1.7;
    S.S(1, 2) = S.S(2, 1) = 0.9; // unused: rows of pattern 0 only
    const double log_m = log_marginal_row(S, {9, 1, 1}, 0, p);
    const double oracle = oracles::quadrature_log_marginal({0.3, 1.7}, p);
    CHECK(std::abs(log_m - oracle) < 1e-6);
}

TEST_CASE("row marginal factorizes over groups")
{
    const MfmPriors p = unit_priors(0.2);
    TransformedSimilarity S;
    S.S = Eigen::MatrixXd::Zero(3, 3);
    S.S(0, 1) = S.S(1, 0) = 0.5;
    S.S(0, 2) = S.S(2, 0) = 1.1;
    const double log_m = log_marginal_row(S, {7, 1, 2}, 0, p);
    const double oracle =
        oracles::quadrature_log_marginal({0.5}, p) + oracles::quadrature_log_marginal({1.1}, p);
    CHECK(std::abs(log_m - oracle) < 2e-6);
}

// --------------------------------------------------------------------------
// Membership conditionals: exact enumeration vs empirical frequencies
// --------------------------------------------------------------------------

TEST_CASE("single-site conditionals match enumeration within 3 SE")
{
    const TransformedSimilarity S = oracles::separated_s3();
    const MfmPriors priors = unit_priors(1.0);
    const VnTable vn = compute_log_vn(3, priors);
    const int trials = 10000;

    for (int site : {0, 2}) {
        const ClusterState base = oracles::two_group_state();
        const std::vector<double> expected = oracles::enumerate_site(S, base, site, priors);

        // Tally outcomes: existing groups in label order, then "new".
        std::vector<int> hits(expected.size(), 0);
        Rng rng = make_rng(1000 + site);
        for (int t = 0; t < trials; ++t) {
            ClusterState st = base;
            const MembershipMove move = update_membership(st, S, site, vn,
                                                          priors, rng);
            const int outcome =
                move.created ? static_cast<int>(expected.size()) - 1
                             : move.group - 1;
            REQUIRE(outcome >= 0);
            REQUIRE(outcome < static_cast<int>(expected.size()));
            ++hits[outcome];
        }
        for (std::size_t c = 0; c < expected.size(); ++c) {
            const double p = expected[c];
            const double freq = static_cast<double>(hits[c]) / trials;
            const double se = std::sqrt(std::max(p * (1.0 - p), 1e-12) / trials);
            INFO("site ", site, " outcome ", c, " expect ", p, " got ", freq);
            CHECK(std::abs(freq - p) <= 3.0 * se + 1e-9);
        }
    }
}

// --------------------------------------------------------------------------
// Sweeps, chains, summaries
// --------------------------------------------------------------------------

TEST_CASE("sweeps are reproducible and preserve the state invariants")
{
    const TransformedSimilarity S = random_similarity(6, 5);
    const MfmPriors priors = resolve_priors(unit_priors(), S);
    const VnTable vn = compute_log_vn(6, priors);

    Rng rng_a = make_rng(2);
    Rng rng_b = make_rng(2);
    ClusterState a = single_group_state(6, priors);
    ClusterState b = single_group_state(6, priors);
    for (int it = 0; it < 25; ++it) {
        a = gibbs_sweep(std::move(a), S, vn, priors, rng_a);
        b = gibbs_sweep(std::move(b), S, vn, priors, rng_b);
        a.validate();
        CHECK(a.z == b.z);
    }
    CHECK(a.U == b.U);
    CHECK(a.T == b.T);
}

TEST_CASE("chain retains exactly iters - burnin draws, reproducibly")
{
    const TransformedSimilarity S = random_similarity(8, 21);
    McmcOptions opt;
    opt.iters = 1000;
    opt.burnin = 500;
    opt.seed = 31;
    const PosteriorDraws a = run_chain(S, MfmPriors{}, opt);
    CHECK(a.draws() == 500);
    for (const auto& z : a.partitions) CHECK(z.size() == 8);

    const PosteriorDraws b = run_chain(S, MfmPriors{}, opt);
    CHECK(a.partitions == b.partitions);
    CHECK(a.k_per_draw == b.k_per_draw);

    opt.burnin = 1000;
    CHECK_THROWS_AS(run_chain(S, MfmPriors{}, opt), InputError);
}

TEST_CASE("chain recovers a strongly separated three-block structure")
{
    std::vector<int> truth;
    for (int g = 1; g <= 3; ++g)
        for (int i = 0; i < 5; ++i) truth.push_back(g);
    const TransformedSimilarity S = blocky_similarity(truth, 17);

    McmcOptions opt;
    opt.iters = 400;
    opt.burnin = 200;
    opt.seed = 5;
    const PosteriorDraws draws = run_chain(S, MfmPriors{}, opt);
    const DahlSummary dahl = dahl_summary(draws);

    // Partition must match the truth exactly (up to labels).
    for (int i = 0; i < 15; ++i)
        for (int j = i + 1; j < 15; ++j)
            CHECK((dahl.partition[i] == dahl.partition[j]) ==
                  (truth[i] == truth[j]));
}

TEST_CASE("exchangeability: permuting the patterns permutes the answer")
{
    std::vector<int> truth;
    for (int g = 1; g <= 3; ++g)
        for (int i = 0; i < 4; ++i) truth.push_back(g);
    const TransformedSimilarity S = blocky_similarity(truth, 23);

    const int n = 12;
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 shuffle_rng(3);
    std::shuffle(perm.begin(), perm.end(), shuffle_rng);

    TransformedSimilarity Sp;
    Sp.S = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) Sp.S(i, j) = S.S(perm[i], perm[j]);

    McmcOptions opt;
    opt.iters = 300;
    opt.burnin = 150;
    opt.seed = 11;
    const auto base = dahl_summary(run_chain(S, MfmPriors{}, opt)).partition;
    opt.seed = 12;
    const auto permuted = dahl_summary(run_chain(Sp, MfmPriors{}, opt)).partition;

    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            CHECK((permuted[i] == permuted[j]) ==
                  (base[perm[i]] == base[perm[j]]));
}

TEST_CASE("dahl summary selects the least-squares draw")
{
    PosteriorDraws draws;
    draws.partitions = {{1, 1, 2}, {1, 1, 2}, {1, 2, 2}};
    draws.k_per_draw = {2, 2, 2};

    const DahlSummary dahl = dahl_summary(draws);
    CHECK(dahl.partition == std::vector<int>{1, 1, 2});
    CHECK(dahl.c_ls_index == 1); // tie with draw 2 resolves to the earliest
    CHECK(dahl.distance == doctest::Approx(4.0 / 9.0));
}

TEST_CASE("dahl summary of identical draws returns them with index 1")
{
    PosteriorDraws draws;
    draws.partitions = {{1, 2, 1}, {1, 2, 1}, {1, 2, 1}};
    draws.k_per_draw = {2, 2, 2};
    const DahlSummary dahl = dahl_summary(draws);
    CHECK(dahl.partition == std::vector<int>{1, 2, 1});
    CHECK(dahl.c_ls_index == 1);
    CHECK(dahl.distance == doctest::Approx(0.0));
}

TEST_CASE("dahl summary ignores label names")
{
    PosteriorDraws a;
    a.partitions = {{1, 1, 2}, {1, 1, 2}, {1, 2, 2}};
    a.k_per_draw = {2, 2, 2};
    PosteriorDraws b = a;
    b.partitions[1] = {2, 2, 1}; // same grouping, relabeled

    const DahlSummary da = dahl_summary(a);
    const DahlSummary db = dahl_summary(b);
    CHECK(da.c_ls_index == db.c_ls_index);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK((da.partition[i] == da.partition[j]) ==
                  (db.partition[i] == db.partition[j]));

    CHECK_THROWS_AS(dahl_summary(PosteriorDraws{}), InputError);
}

TEST_CASE("posterior k histogram counts group sizes")
{
    PosteriorDraws draws;
    draws.partitions = {{1, 1, 1}, {1, 2, 3}, {1, 2, 2}, {1, 2, 1}};
    draws.k_per_draw = {1, 3, 2, 2};
    const auto hist = posterior_k_histogram(draws);
    CHECK(hist.at(1) == doctest::Approx(0.25));
    CHECK(hist.at(2) == doctest::Approx(0.5));
    CHECK(hist.at(3) == doctest::Approx(0.25));
    double total = 0.0;
    for (const auto& [k, v] : hist) {
        CHECK(k >= 1);
        CHECK(k <= 3);
        total += v;
    }
    CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("mu0 resolves to the off-diagonal mean when unset")
{
    TransformedSimilarity S;
    S.S.resize(2, 2);
    S.S << 9.0, 1.5, 1.5, 9.0;
    const MfmPriors resolved = resolve_priors(MfmPriors{}, S);
    CHECK(resolved.mu0_value() == doctest::Approx(1.5));

    MfmPriors preset;
    preset.mu0 = -2.0;
    CHECK(resolve_priors(preset, S).mu0_value() == doctest::Approx(-2.0));
}
