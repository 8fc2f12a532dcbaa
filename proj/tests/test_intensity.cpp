#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include <Eigen/Eigenvalues>

#include "ppgroup/grid_fft.hpp"
#include "ppgroup/intensity.hpp"

using namespace ppgroup;

namespace {

GridSpec small_grid(int nx, int ny)
{
    GridSpec spec;
    spec.nx = nx;
    spec.ny = ny;
    return spec;
}

PointPattern uniform_pattern(int n, const Domain& d, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(d.x_min, d.x_max);
    std::uniform_real_distribution<double> uy(d.y_min, d.y_max);
    PointPattern pat{"u", {}};
    for (int i = 0; i < n; ++i) pat.points.push_back({ux(rng), uy(rng)});
    return pat;
}

} // namespace

TEST_CASE("covariance at zero distance is sigma2 plus jitter")
{
    CovarianceSpec cov;
    cov.sigma2 = 2.5;
    const GridSpec spec = small_grid(3, 3);
    const Eigen::MatrixXd K = covariance_matrix(spec, cov);
    for (int c = 0; c < spec.cells(); ++c)
        CHECK(K(c, c) == doctest::Approx(2.5 * (1.0 + 1e-6)).epsilon(1e-12));
}

TEST_CASE("covariance matrix is exactly symmetric")
{
    for (KernelType kernel :
         {KernelType::matern32, KernelType::squared_exponential}) {
        CovarianceSpec cov;
        cov.kernel = kernel;
        cov.rho = 4.0;
        const Eigen::MatrixXd K = covariance_matrix(small_grid(6, 5), cov);
        CHECK((K - K.transpose()).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("covariance eigenvalues stay essentially nonnegative")
{
    // Eigendecomposition oracle on a 10x10 grid.
    for (KernelType kernel :
         {KernelType::matern32, KernelType::squared_exponential}) {
        CovarianceSpec cov;
        cov.kernel = kernel;
        const Eigen::MatrixXd K = covariance_matrix(small_grid(10, 10), cov);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K);
        CHECK(eig.eigenvalues().minCoeff() >= -1e-8 * cov.sigma2);
    }
}

TEST_CASE("fft operator reproduces the dense covariance product")
{
    std::mt19937_64 rng(7);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (KernelType kernel :
         {KernelType::matern32, KernelType::squared_exponential}) {
        CovarianceSpec cov;
        cov.kernel = kernel;
        cov.sigma2 = 1.7;
        cov.rho = 5.0;
        const GridSpec spec = small_grid(11, 9);
        const Eigen::MatrixXd K = covariance_matrix(spec, cov);
        StationaryGridOperator op(spec, cov);
        for (int rep = 0; rep < 3; ++rep) {
            Eigen::VectorXd x(spec.cells());
            for (int c = 0; c < spec.cells(); ++c) x[c] = gauss(rng);
            const Eigen::VectorXd dense = K * x;
            const Eigen::VectorXd fast = op.apply(x);
            CHECK((dense - fast).lpNorm<Eigen::Infinity>() <=
                  1e-10 * dense.lpNorm<Eigen::Infinity>());
        }
    }
}

TEST_CASE("analytic gradient matches central finite differences")
{
    const GridSpec spec = small_grid(6, 6);
    CovarianceSpec cov;
    cov.rho = 3.0;

    PointPattern pat = uniform_pattern(40, spec.domain, 11);
    const CountGrid counts = bin_counts(pat, spec);
    const LgcpObjective obj(counts, cov);

    std::mt19937_64 rng(5);
    std::normal_distribution<double> gauss(0.0, 0.5);
    Eigen::VectorXd z(spec.cells());
    for (int c = 0; c < spec.cells(); ++c) z[c] = obj.prior_mean() + gauss(rng);

    const Eigen::VectorXd grad = obj.gradient(z);
    const double h = 1e-5;
    for (int c = 0; c < spec.cells(); ++c) {
        Eigen::VectorXd zp = z, zm = z;
        zp[c] += h;
        zm[c] -= h;
        const double fd = (obj.value(zp) - obj.value(zm)) / (2.0 * h);
        CHECK(std::abs(grad[c] - fd) <=
              1e-5 * std::max(1.0, std::abs(grad[c])));
    }
}

TEST_CASE("newton fit reaches the gradient tolerance")
{
    const GridSpec spec = small_grid(12, 10);
    CovarianceSpec cov;
    PointPattern pat = uniform_pattern(300, spec.domain, 21);
    const CountGrid counts = bin_counts(pat, spec);

    const LgcpFit fit = fit_lgcp_map(counts, cov);
    CHECK(fit.report.grad_sup_norm <= 1e-6);

    // Claimed gradient agrees with the dense evaluator.
    const LgcpObjective obj(counts, cov);
    CHECK(obj.gradient(fit.intensity.z).lpNorm<Eigen::Infinity>() <= 1e-5);
}

TEST_CASE("homogeneous data recovers the flat intensity")
{
    const GridSpec spec; // default 47x50
    CovarianceSpec cov;
    PointPattern pat = uniform_pattern(2000, spec.domain, 2024);
    const CountGrid counts = bin_counts(pat, spec);
    const LgcpFit fit = fit_lgcp_map(counts, cov);

    const double truth = 2000.0 / 2350.0;
    double sum = 0.0;
    int used = 0;
    for (int c = 0; c < spec.cells(); ++c) {
        const Point ctr = spec.cell_center(c);
        const double margin = cov.rho; // one length-scale from every edge
        if (ctr.x < spec.domain.x_min + margin ||
            ctr.x > spec.domain.x_max - margin ||
            ctr.y < spec.domain.y_min + margin ||
            ctr.y > spec.domain.y_max - margin)
            continue;
        sum += fit.intensity.lambda[c];
        ++used;
    }
    const double mean = sum / used;
    CHECK(mean == doctest::Approx(truth).epsilon(0.10));
}

TEST_CASE("two starts land on the same optimum")
{
    const GridSpec spec = small_grid(10, 8);
    CovarianceSpec cov;
    cov.rho = 4.0;
    PointPattern pat = uniform_pattern(120, spec.domain, 3);
    const CountGrid counts = bin_counts(pat, spec);

    const LgcpFit a = fit_lgcp_map(counts, cov);
    std::mt19937_64 rng(17);
    std::normal_distribution<double> gauss(0.0, 2.0);
    Eigen::VectorXd z0(spec.cells());
    for (int c = 0; c < spec.cells(); ++c) z0[c] = gauss(rng);
    const LgcpFit b = fit_lgcp_map(counts, cov, z0);

    CHECK((a.intensity.z - b.intensity.z).lpNorm<Eigen::Infinity>() <= 1e-4);
}

TEST_CASE("doubling the counts raises the fit everywhere")
{
    const GridSpec spec = small_grid(8, 8);
    CovarianceSpec cov;
    cov.rho = 4.0;
    PointPattern pat = uniform_pattern(60, spec.domain, 8);
    CountGrid counts = bin_counts(pat, spec);

    const LgcpFit base = fit_lgcp_map(counts, cov);
    for (auto& c : counts.counts) c *= 2; // pool two identical patterns
    const LgcpFit doubled = fit_lgcp_map(counts, cov);
    CHECK((doubled.intensity.lambda.array() >=
           base.intensity.lambda.array() - 1e-9)
              .all());
}

TEST_CASE("non-convergence raises a FitError carrying the report")
{
    const GridSpec spec = small_grid(8, 8);
    CovarianceSpec cov;
    PointPattern pat = uniform_pattern(100, spec.domain, 4);
    const CountGrid counts = bin_counts(pat, spec);
    FitOptions opt;
    opt.max_iter = 1;
    opt.tol = 1e-12;
    try {
        fit_lgcp_map(counts, cov, opt);
        FAIL("expected FitError");
    } catch (const FitError& e) {
        CHECK(e.report.grad_sup_norm > opt.tol);
    }
}

TEST_CASE("fitted surface beats the prior-mean surface in likelihood")
{
    const GridSpec spec = small_grid(10, 10);
    CovarianceSpec cov;
    PointPattern pat = uniform_pattern(150, spec.domain, 13);
    const CountGrid counts = bin_counts(pat, spec);
    const LgcpFit fit = fit_lgcp_map(counts, cov);

    const double mu = resolved_prior_mean(cov, counts.total(), spec.domain.area());
    const IntensityGrid flat =
        IntensityGrid::from_z(spec, Eigen::VectorXd::Constant(spec.cells(), mu));
    CHECK(pp_loglik(fit.intensity, pat) >= pp_loglik(flat, pat));
}

TEST_CASE("kernel intensity handles the empty pattern")
{
    const GridSpec spec = small_grid(5, 5);
    const IntensityGrid g = kernel_intensity(PointPattern{"e", {}}, spec, 2.0);
    const double floor = 1e-8 / spec.cell_area();
    CHECK((g.lambda.array() == floor).all());
}

TEST_CASE("kernel intensity integrates to the pattern size")
{
    const GridSpec spec; // default court grid
    PointPattern pat = uniform_pattern(37, spec.domain, 6);
    const IntensityGrid g = kernel_intensity(pat, spec, 3.0);
    CHECK(g.mass() == doctest::Approx(37.0).epsilon(1e-12));
}

TEST_CASE("kernel intensity peaks at a lone point")
{
    const GridSpec spec; // default court grid
    const Point center{23.5, 25.0};
    PointPattern pat{"p", {center}};
    const IntensityGrid g = kernel_intensity(pat, spec, 2.0);
    int argmax = 0;
    g.lambda.maxCoeff(&argmax);
    CHECK(argmax == spec.cell_index(center));
}

TEST_CASE("point-process log likelihood on flat surfaces")
{
    const GridSpec spec; // default: 2350 unit cells
    const IntensityGrid ones =
        IntensityGrid::from_lambda(spec, Eigen::VectorXd::Ones(spec.cells()));

    CHECK(pp_loglik(ones, PointPattern{"e", {}}) == doctest::Approx(-2350.0));
    CHECK(pp_loglik(ones, PointPattern{"p", {{10, 10}}}) ==
          doctest::Approx(-2350.0));

    const IntensityGrid twos = IntensityGrid::from_lambda(
        spec, Eigen::VectorXd::Constant(spec.cells(), 2.0));
    PointPattern three{"t", {{1, 1}, {2, 2}, {3, 3}}};
    CHECK(pp_loglik(twos, three) ==
          doctest::Approx(3.0 * std::log(2.0) - 4700.0));

    CHECK_THROWS_AS(pp_loglik(ones, PointPattern{"bad", {{-1, 0}}}), InputError);
}
