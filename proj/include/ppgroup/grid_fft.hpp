#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "ppgroup/intensity.hpp"

namespace ppgroup {

/// Exact matrix-vector products with the stationary grid covariance (jitter
/// included) via circulant embedding on a (2nx)-by-(2ny) torus. The kernel is
/// evaluated at wrapped lags, so apply() reproduces the dense product of
/// covariance_matrix up to FFT roundoff at O(N log N) cost.
///
/// An instance owns FFTW scratch buffers: not safe for concurrent apply()
/// calls on the same object; distinct instances may run in parallel.
class StationaryGridOperator {
public:
    StationaryGridOperator(const GridSpec& spec, const CovarianceSpec& cov);
    ~StationaryGridOperator();

    StationaryGridOperator(const StationaryGridOperator&) = delete;
    StationaryGridOperator& operator=(const StationaryGridOperator&) = delete;

    /// y = K x over the nx*ny cells, row-major.
    Eigen::VectorXd apply(const Eigen::VectorXd& x) const;

    int cells() const { return nx_ * ny_; }

    /// Kernel value at zero lag plus jitter (the constant diagonal of K).
    double diagonal() const { return diag_; }

private:
    int nx_, ny_; // grid
    int px_, py_; // embedding torus
    double diag_;
    std::vector<std::complex<double>> spectrum_;
    struct Plans;
    Plans* plans_; // fftw plans and aligned buffers
};

} // namespace ppgroup
