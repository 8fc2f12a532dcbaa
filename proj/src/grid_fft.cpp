#include "ppgroup/grid_fft.hpp"

#include <cmath>
#include <mutex>

#include <fftw3.h>

namespace ppgroup {

namespace {
// FFTW planning is not thread-safe; execution on private buffers is.
std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}
} // namespace

struct StationaryGridOperator::Plans {
    fftw_complex* buf = nullptr;
    fftw_plan forward{};
    fftw_plan inverse{};

    ~Plans()
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        if (forward) fftw_destroy_plan(forward);
        if (inverse) fftw_destroy_plan(inverse);
        if (buf) fftw_free(buf);
    }
};

StationaryGridOperator::StationaryGridOperator(const GridSpec& spec,
                                               const CovarianceSpec& cov)
    : nx_(spec.nx), ny_(spec.ny), px_(2 * spec.nx), py_(2 * spec.ny)
{
    spec.validate();
    cov.validate();
    diag_ = cov.value(0.0) + cov.jitter();

    const double dx = spec.dx();
    const double dy = spec.dy();
    const std::size_t n = static_cast<std::size_t>(px_) * py_;

    plans_ = new Plans;
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        plans_->buf = fftw_alloc_complex(n);
        // FFTW_ESTIMATE keeps planning deterministic run to run.
        plans_->forward =
            fftw_plan_dft_2d(py_, px_, plans_->buf, plans_->buf, FFTW_FORWARD,
                             FFTW_ESTIMATE);
        plans_->inverse =
            fftw_plan_dft_2d(py_, px_, plans_->buf, plans_->buf, FFTW_BACKWARD,
                             FFTW_ESTIMATE);
    }

    // First circulant column: kernel at wrapped lags, jitter at lag zero.
    for (int q = 0; q < py_; ++q) {
        const int ly = q <= py_ / 2 ? q : q - py_;
        for (int p = 0; p < px_; ++p) {
            const int lx = p <= px_ / 2 ? p : p - px_;
            const double d = std::hypot(lx * dx, ly * dy);
            double v = cov.value(d);
            if (p == 0 && q == 0) v += cov.jitter();
            plans_->buf[static_cast<std::size_t>(q) * px_ + p][0] = v;
            plans_->buf[static_cast<std::size_t>(q) * px_ + p][1] = 0.0;
        }
    }
    fftw_execute(plans_->forward);
    spectrum_.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        spectrum_[i] = {plans_->buf[i][0], plans_->buf[i][1]};
}

StationaryGridOperator::~StationaryGridOperator() { delete plans_; }

Eigen::VectorXd StationaryGridOperator::apply(const Eigen::VectorXd& x) const
{
    if (x.size() != cells())
        throw InputError("grid operator: vector length does not match grid");

    const std::size_t n = static_cast<std::size_t>(px_) * py_;
    fftw_complex* buf = plans_->buf;
    for (std::size_t i = 0; i < n; ++i) buf[i][0] = buf[i][1] = 0.0;
    for (int iy = 0; iy < ny_; ++iy)
        for (int ix = 0; ix < nx_; ++ix)
            buf[static_cast<std::size_t>(iy) * px_ + ix][0] =
                x[static_cast<Eigen::Index>(iy) * nx_ + ix];

    fftw_execute(plans_->forward);
    for (std::size_t i = 0; i < n; ++i) {
        const std::complex<double> v{buf[i][0], buf[i][1]};
        const std::complex<double> w = v * spectrum_[i];
        buf[i][0] = w.real();
        buf[i][1] = w.imag();
    }
    fftw_execute(plans_->inverse);

    const double scale = 1.0 / static_cast<double>(n);
    Eigen::VectorXd y(cells());
    for (int iy = 0; iy < ny_; ++iy)
        for (int ix = 0; ix < nx_; ++ix)
            y[static_cast<Eigen::Index>(iy) * nx_ + ix] =
                buf[static_cast<std::size_t>(iy) * px_ + ix][0] * scale;
    return y;
}

} // namespace ppgroup
