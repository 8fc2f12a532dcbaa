#include "ppgroup/intensity.hpp"

#include <cmath>
#include <limits>

#include "ppgroup/grid_fft.hpp"

namespace ppgroup {

KernelType kernel_from_string(const std::string& name)
{
    if (name == "matern32") return KernelType::matern32;
    if (name == "squared_exponential") return KernelType::squared_exponential;
    throw InputError("unknown kernel: " + name);
}

std::string kernel_to_string(KernelType k)
{
    return k == KernelType::matern32 ? "matern32" : "squared_exponential";
}

void CovarianceSpec::validate() const
{
    if (!(sigma2 > 0.0)) throw InputError("covariance: sigma2 must be > 0");
    if (!(rho > 0.0)) throw InputError("covariance: rho must be > 0");
}

double CovarianceSpec::value(double d) const
{
    switch (kernel) {
    case KernelType::matern32: {
        const double u = std::sqrt(3.0) * d / rho;
        return sigma2 * (1.0 + u) * std::exp(-u);
    }
    case KernelType::squared_exponential:
        return sigma2 * std::exp(-d * d / (2.0 * rho * rho));
    }
    return 0.0; // unreachable
}

double resolved_prior_mean(const CovarianceSpec& cov, long total_points,
                           double area)
{
    if (cov.mean) return *cov.mean;
    return std::log(static_cast<double>(std::max<long>(total_points, 1)) / area);
}

Eigen::MatrixXd covariance_matrix(const GridSpec& spec,
                                  const CovarianceSpec& cov)
{
    spec.validate();
    cov.validate();
    const int n = spec.cells();
    Eigen::MatrixXd K(n, n);
    for (int c = 0; c < n; ++c) {
        const Point pc = spec.cell_center(c);
        K(c, c) = cov.value(0.0) + cov.jitter();
        for (int d = c + 1; d < n; ++d) {
            const Point pd = spec.cell_center(d);
            const double v = cov.value(std::hypot(pc.x - pd.x, pc.y - pd.y));
            K(c, d) = v;
            K(d, c) = v;
        }
    }
    return K;
}

IntensityGrid IntensityGrid::from_z(const GridSpec& spec, Eigen::VectorXd z)
{
    if (z.size() != spec.cells())
        throw InputError("intensity: field length does not match grid");
    if (!z.allFinite()) throw NumericalError("intensity: non-finite log field");
    IntensityGrid g;
    g.spec = spec;
    g.lambda = z.array().exp().matrix();
    g.z = std::move(z);
    return g;
}

IntensityGrid IntensityGrid::from_lambda(const GridSpec& spec,
                                         Eigen::VectorXd lambda)
{
    if (lambda.size() != spec.cells())
        throw InputError("intensity: field length does not match grid");
    if (!lambda.allFinite() || (lambda.array() <= 0.0).any())
        throw NumericalError("intensity: lambda must be positive and finite");
    IntensityGrid g;
    g.spec = spec;
    g.z = lambda.array().log().matrix();
    g.lambda = std::move(lambda);
    return g;
}

double IntensityGrid::mass() const { return lambda.sum() * spec.cell_area(); }

// ---------------------------------------------------------------------------
// Dense objective (small grids, oracles)
// ---------------------------------------------------------------------------

LgcpObjective::LgcpObjective(const CountGrid& counts, const CovarianceSpec& cov)
    : cell_area_(counts.spec.cell_area()),
      mu_(resolved_prior_mean(cov, counts.total(), counts.spec.domain.area()))
{
    const int n = counts.spec.cells();
    counts_.resize(n);
    for (int c = 0; c < n; ++c) counts_[c] = static_cast<double>(counts.counts[c]);
    Eigen::MatrixXd K = covariance_matrix(counts.spec, cov);
    llt_.compute(K);
    if (llt_.info() != Eigen::Success)
        throw NumericalError("covariance matrix is not positive definite");
}

double LgcpObjective::value(const Eigen::VectorXd& z) const
{
    const Eigen::VectorXd v = (z.array() - mu_).matrix();
    const Eigen::VectorXd alpha = llt_.solve(v);
    const double data = (counts_.array() * z.array()).sum() -
                        cell_area_ * z.array().exp().sum();
    return data - 0.5 * v.dot(alpha);
}

Eigen::VectorXd LgcpObjective::gradient(const Eigen::VectorXd& z) const
{
    const Eigen::VectorXd v = (z.array() - mu_).matrix();
    const Eigen::VectorXd alpha = llt_.solve(v);
    return counts_ - (cell_area_ * z.array().exp()).matrix() - alpha;
}

// ---------------------------------------------------------------------------
// Newton MAP fit
// ---------------------------------------------------------------------------

namespace {

struct NewtonState {
    Eigen::VectorXd z;
    Eigen::VectorXd alpha; // K^-1 (z - mu), maintained exactly by the updates
    double value = 0.0;
};

double objective_value(const Eigen::VectorXd& counts, double area,
                       const Eigen::VectorXd& z, const Eigen::VectorXd& v,
                       const Eigen::VectorXd& alpha)
{
    const double expsum = z.array().exp().sum();
    if (!std::isfinite(expsum)) return -std::numeric_limits<double>::infinity();
    return (counts.array() * z.array()).sum() - area * expsum - 0.5 * v.dot(alpha);
}

// Solves B y = rhs with B = I + W^1/2 K W^1/2 by Jacobi-preconditioned CG.
// B is symmetric positive definite with spectrum bounded below by 1.
Eigen::VectorXd solve_inner_cg(const StationaryGridOperator& K,
                               const Eigen::VectorXd& sqrt_w,
                               const Eigen::VectorXd& rhs, double rel_tol)
{
    const Eigen::Index n = rhs.size();
    const auto apply_b = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        return v + sqrt_w.cwiseProduct(K.apply(sqrt_w.cwiseProduct(v)));
    };
    const Eigen::VectorXd inv_diag =
        (1.0 + K.diagonal() * sqrt_w.array().square()).inverse().matrix();

    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd r = rhs;
    Eigen::VectorXd s = inv_diag.cwiseProduct(r);
    Eigen::VectorXd p = s;
    double rs = r.dot(s);
    const double stop = rel_tol * rhs.norm();
    const int max_iter = static_cast<int>(20 * n) + 100;
    for (int it = 0; it < max_iter; ++it) {
        if (r.norm() <= stop) return y;
        const Eigen::VectorXd bp = apply_b(p);
        const double curvature = p.dot(bp);
        if (!(curvature > 0.0))
            throw NumericalError("covariance operator is not positive definite");
        const double step = rs / curvature;
        y += step * p;
        r -= step * bp;
        s = inv_diag.cwiseProduct(r);
        const double rs_next = r.dot(s);
        p = s + (rs_next / rs) * p;
        rs = rs_next;
    }
    throw NumericalError("inner CG failed to converge");
}

LgcpFit run_newton(const CountGrid& counts, const CovarianceSpec& cov,
                   NewtonState state, double mu, const FitOptions& options)
{
    const GridSpec& spec = counts.spec;
    const int n = spec.cells();
    const double area = spec.cell_area();
    StationaryGridOperator K(spec, cov);

    Eigen::VectorXd nvec(n);
    for (int c = 0; c < n; ++c) nvec[c] = static_cast<double>(counts.counts[c]);

    Eigen::VectorXd v = (state.z.array() - mu).matrix();
    state.value = objective_value(nvec, area, state.z, v, state.alpha);

    FitReport report;
    for (int iter = 0; iter < options.max_iter; ++iter) {
        const Eigen::VectorXd w = (area * state.z.array().exp()).matrix();
        const Eigen::VectorXd grad = nvec - w - state.alpha;
        report.iterations = iter;
        report.grad_sup_norm = grad.lpNorm<Eigen::Infinity>();
        report.log_posterior = state.value;
        if (report.grad_sup_norm <= options.tol)
            return {IntensityGrid::from_z(spec, state.z), report};

        // Newton target mu + K a solves (W + K^-1)(z_new - mu) = b.
        const Eigen::VectorXd sqrt_w = w.cwiseSqrt();
        const Eigen::VectorXd b = w.cwiseProduct(v) + (nvec - w);
        const Eigen::VectorXd kb = K.apply(b);
        const Eigen::VectorXd y =
            solve_inner_cg(K, sqrt_w, sqrt_w.cwiseProduct(kb), 1e-13);
        const Eigen::VectorXd a_new = b - sqrt_w.cwiseProduct(y);
        const Eigen::VectorXd target = (K.apply(a_new).array() + mu).matrix();

        const Eigen::VectorXd dz = target - state.z;
        const Eigen::VectorXd dalpha = a_new - state.alpha;

        // Step-halving until the objective increases.
        double step = 1.0;
        bool accepted = false;
        for (int h = 0; h < 30; ++h, step *= 0.5) {
            const Eigen::VectorXd z_try = state.z + step * dz;
            const Eigen::VectorXd alpha_try = state.alpha + step * dalpha;
            const Eigen::VectorXd v_try = (z_try.array() - mu).matrix();
            const double val_try =
                objective_value(nvec, area, z_try, v_try, alpha_try);
            if (val_try > state.value) {
                state.z = z_try;
                state.alpha = alpha_try;
                state.value = val_try;
                v = v_try;
                accepted = true;
                break;
            }
        }
        if (!accepted) break; // no ascent left; final gradient check below
    }

    const Eigen::VectorXd w = (area * state.z.array().exp()).matrix();
    const Eigen::VectorXd grad = nvec - w - state.alpha;
    report.grad_sup_norm = grad.lpNorm<Eigen::Infinity>();
    report.log_posterior = state.value;
    if (report.grad_sup_norm <= options.tol)
        return {IntensityGrid::from_z(spec, state.z), report};
    throw FitError("Newton fit did not reach tolerance " +
                       format_double(options.tol) + " (gradient sup-norm " +
                       format_double(report.grad_sup_norm) + ")",
                   report);
}

} // namespace

LgcpFit fit_lgcp_map(const CountGrid& counts, const CovarianceSpec& cov,
                     const FitOptions& options)
{
    counts.spec.validate();
    cov.validate();
    const double mu =
        resolved_prior_mean(cov, counts.total(), counts.spec.domain.area());
    NewtonState state;
    state.z = Eigen::VectorXd::Constant(counts.spec.cells(), mu);
    state.alpha = Eigen::VectorXd::Zero(counts.spec.cells());
    return run_newton(counts, cov, std::move(state), mu, options);
}

LgcpFit fit_lgcp_map(const CountGrid& counts, const CovarianceSpec& cov,
                     const Eigen::VectorXd& z_start, const FitOptions& options)
{
    counts.spec.validate();
    cov.validate();
    if (z_start.size() != counts.spec.cells())
        throw InputError("fit: start vector length does not match grid");
    const double mu =
        resolved_prior_mean(cov, counts.total(), counts.spec.domain.area());

    NewtonState state;
    state.z = z_start;
    // An arbitrary start needs alpha = K^-1 (z - mu) once, via a dense solve.
    Eigen::MatrixXd K = covariance_matrix(counts.spec, cov);
    Eigen::LLT<Eigen::MatrixXd> llt(K);
    if (llt.info() != Eigen::Success)
        throw NumericalError("covariance matrix is not positive definite");
    state.alpha = llt.solve(Eigen::VectorXd((z_start.array() - mu).matrix()));
    return run_newton(counts, cov, std::move(state), mu, options);
}

// ---------------------------------------------------------------------------
// Kernel smoothing baseline
// ---------------------------------------------------------------------------

namespace {
double normal_cdf(double t) { return 0.5 * std::erfc(-t / std::sqrt(2.0)); }
} // namespace

IntensityGrid kernel_intensity(const PointPattern& pattern,
                               const GridSpec& spec, double bandwidth)
{
    spec.validate();
    if (!(bandwidth > 0.0)) throw InputError("kernel_intensity: bandwidth must be > 0");

    const int n = spec.cells();
    const double area = spec.cell_area();
    if (pattern.points.empty()) {
        Eigen::VectorXd floor = Eigen::VectorXd::Constant(n, 1e-8 / area);
        return IntensityGrid::from_lambda(spec, std::move(floor));
    }

    const Domain& d = spec.domain;
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(n);
    const double h2 = bandwidth * bandwidth;
    const double norm = 1.0 / (2.0 * M_PI * h2);
    for (const auto& p : pattern.points) {
        if (!d.contains(p))
            throw InputError("kernel_intensity: point outside the domain");
        // Fraction of this point's kernel mass inside the rectangle.
        const double wx = normal_cdf((d.x_max - p.x) / bandwidth) -
                          normal_cdf((d.x_min - p.x) / bandwidth);
        const double wy = normal_cdf((d.y_max - p.y) / bandwidth) -
                          normal_cdf((d.y_min - p.y) / bandwidth);
        const double inv_mass = 1.0 / (wx * wy);
        for (int c = 0; c < n; ++c) {
            const Point ctr = spec.cell_center(c);
            const double r2 = (ctr.x - p.x) * (ctr.x - p.x) +
                              (ctr.y - p.y) * (ctr.y - p.y);
            lambda[c] += inv_mass * norm * std::exp(-r2 / (2.0 * h2));
        }
    }
    const double scale =
        static_cast<double>(pattern.size()) / (lambda.sum() * area);
    lambda *= scale;
    lambda = lambda.cwiseMax(1e-300); // guard exact underflow far from all points
    return IntensityGrid::from_lambda(spec, std::move(lambda));
}

double pp_loglik(const IntensityGrid& intensity, const PointPattern& pattern)
{
    const GridSpec& spec = intensity.spec;
    double loglik = -intensity.lambda.sum() * spec.cell_area();
    for (const auto& p : pattern.points)
        loglik += intensity.z[spec.cell_index(p)];
    return loglik;
}

} // namespace ppgroup
