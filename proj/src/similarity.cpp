#include "ppgroup/similarity.hpp"

#include <cmath>

namespace ppgroup {

double fisher_z(double h, double clamp_eps)
{
    if (!(clamp_eps > 0.0) || clamp_eps >= 1e-3)
        throw InputError("fisher_transform: clamp must lie in (0, 1e-3)");
    const double v = std::min(h, 1.0 - clamp_eps);
    return 0.5 * std::log((1.0 + v) / (1.0 - v));
}

SimilarityMatrix similarity_matrix(const std::vector<IntensityGrid>& surfaces)
{
    const int n = static_cast<int>(surfaces.size());
    if (n < 2) throw InputError("similarity: need at least two surfaces");
    const GridSpec& spec = surfaces.front().spec;

    Eigen::MatrixXd P(spec.cells(), n); // unit-sum columns
    for (int i = 0; i < n; ++i) {
        if (!(surfaces[i].spec == spec))
            throw InputError("similarity: surface " + std::to_string(i) +
                             " is on a different grid");
        const double total = surfaces[i].lambda.sum();
        if (!(total > 0.0))
            throw InputError("similarity: surface " + std::to_string(i) +
                             " has zero mass");
        P.col(i) = surfaces[i].lambda / total;
    }

    SimilarityMatrix out;
    out.H = Eigen::MatrixXd::Ones(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double h = std::exp(-(P.col(i) - P.col(j)).norm());
            out.H(i, j) = h;
            out.H(j, i) = h;
        }
    return out;
}

TransformedSimilarity fisher_transform(const SimilarityMatrix& H,
                                       double clamp_eps)
{
    const int n = H.size();
    TransformedSimilarity out;
    out.S.resize(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            out.S(i, j) = fisher_z(H.H(i, j), clamp_eps);
    return out;
}

} // namespace ppgroup
