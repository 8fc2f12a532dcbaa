#pragma once

#include <optional>
#include <string>

#include <Eigen/Dense>

#include "ppgroup/court.hpp"
#include "ppgroup/errors.hpp"

namespace ppgroup {

enum class KernelType { matern32, squared_exponential };

KernelType kernel_from_string(const std::string& name);
std::string kernel_to_string(KernelType k);

/// Stationary covariance of the latent log-intensity field.
struct CovarianceSpec {
    KernelType kernel = KernelType::matern32;
    double sigma2 = 1.0; // marginal variance
    double rho = 6.0;    // length-scale, feet

    /// Prior mean of the log field; when unset, log(max(N,1)/area) of the
    /// fitted pattern is used.
    std::optional<double> mean{};

    void validate() const;

    /// Kernel value at distance d (no jitter).
    double value(double d) const;

    /// Diagonal jitter keeping dense factorizations positive definite.
    double jitter() const { return 1e-6 * sigma2; }
};

double resolved_prior_mean(const CovarianceSpec& cov, long total_points,
                           double area);

/// Dense covariance over the grid's cell centers, jitter included on the
/// diagonal. Quadratic in the cell count; meant for small grids and oracles.
Eigen::MatrixXd covariance_matrix(const GridSpec& spec,
                                  const CovarianceSpec& cov);

/// Nonnegative intensity surface on a grid together with its log field.
struct IntensityGrid {
    GridSpec spec{};
    Eigen::VectorXd lambda; // events per square foot, per cell
    Eigen::VectorXd z;      // log(lambda)

    static IntensityGrid from_z(const GridSpec& spec, Eigen::VectorXd z);
    static IntensityGrid from_lambda(const GridSpec& spec,
                                     Eigen::VectorXd lambda);

    /// Integral of the surface over the domain: sum lambda_c * cell_area.
    double mass() const;
};

struct FitReport {
    int iterations = 0;
    double grad_sup_norm = 0.0;
    double log_posterior = 0.0;
};

/// Thrown when the Newton fit fails; carries the last report.
class FitError : public NumericalError {
public:
    FitError(const std::string& what, FitReport report)
        : NumericalError(what), report(report)
    {
    }
    FitReport report;
};

struct FitOptions {
    double tol = 1e-6; // gradient sup-norm at the optimum
    int max_iter = 50;
};

struct LgcpFit {
    IntensityGrid intensity;
    FitReport report;
};

/// Log posterior of the latent field given binned counts,
///   sum_c (n_c z_c - a exp(z_c)) - (z-mu)' K^-1 (z-mu) / 2,
/// with analytic gradient. Builds the dense covariance once; used by the
/// optimizer's tests and by small-grid oracles.
class LgcpObjective {
public:
    LgcpObjective(const CountGrid& counts, const CovarianceSpec& cov);

    double value(const Eigen::VectorXd& z) const;
    Eigen::VectorXd gradient(const Eigen::VectorXd& z) const;
    double prior_mean() const { return mu_; }

private:
    Eigen::VectorXd counts_;
    double cell_area_;
    double mu_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
};

/// MAP fit of the latent log field by damped Newton with step-halving. The
/// start defaults to the constant prior mean. Throws FitError when max_iter
/// Newton steps leave the gradient above tol.
LgcpFit fit_lgcp_map(const CountGrid& counts, const CovarianceSpec& cov,
                     const FitOptions& options = {});
LgcpFit fit_lgcp_map(const CountGrid& counts, const CovarianceSpec& cov,
                     const Eigen::VectorXd& z_start,
                     const FitOptions& options = {});

/// Gaussian kernel estimate at the cell centers, edge-corrected by each
/// point's in-domain kernel mass and rescaled so the surface integrates to
/// the pattern size. An empty pattern yields the uniform floor 1e-8 / area.
IntensityGrid kernel_intensity(const PointPattern& pattern,
                               const GridSpec& spec, double bandwidth);

/// Poisson-process log likelihood of a pattern under a gridded intensity:
/// sum_i log lambda(cell of s_i) - sum_c lambda_c * cell_area.
double pp_loglik(const IntensityGrid& intensity, const PointPattern& pattern);

} // namespace ppgroup
