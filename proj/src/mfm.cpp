#include "ppgroup/mfm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ppgroup/errors.hpp"

namespace ppgroup {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogTwoPi = 1.8378770664093454836;

double log_add_exp(double a, double b)
{
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(std::min(a, b) - m));
}

double log_normal_pdf(double x, double mean, double precision)
{
    return 0.5 * (std::log(precision) - kLogTwoPi) -
           0.5 * precision * (x - mean) * (x - mean);
}
} // namespace

double KPrior::log_pmf(int k) const
{
    if (k < 1) return kNegInf;
    const double lam = poisson_mean;
    // Poisson(lam) conditioned on k >= 1.
    return -lam + k * std::log(lam) - std::lgamma(k + 1.0) -
           std::log1p(-std::exp(-lam));
}

void MfmPriors::validate() const
{
    if (!(gamma > 0.0) || !(alpha > 0.0) || !(beta > 0.0) || !(k0 > 0.0))
        throw InputError("priors: gamma, alpha, beta, k0 must all be > 0");
    if (!(k_prior.poisson_mean > 0.0))
        throw InputError("priors: k prior mean must be > 0");
}

double MfmPriors::mu0_value() const
{
    if (!mu0) throw InputError("priors: mu0 has not been resolved");
    return *mu0;
}

MfmPriors resolve_priors(MfmPriors priors, const TransformedSimilarity& S)
{
    priors.validate();
    if (priors.mu0) return priors;
    const int n = S.size();
    if (n < 2) throw InputError("priors: need at least two patterns to set mu0");
    double sum = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) sum += S.S(i, j);
    priors.mu0 = sum / (static_cast<double>(n) * (n - 1));
    return priors;
}

double VnTable::log_ratio(int w) const
{
    if (w < 1 || w >= n)
        throw InputError("V_n ratio: w must lie in [1, n-1]");
    return log_vn[w] - log_vn[w - 1];
}

VnTable compute_log_vn(int n, const MfmPriors& priors, double rel_tol,
                       long max_k)
{
    priors.validate();
    if (n < 1) throw InputError("V_n: n must be >= 1");
    if (!(rel_tol > 0.0)) throw InputError("V_n: rel_tol must be > 0");

    const double gamma = priors.gamma;
    const double log_tol = std::log(rel_tol);
    const long cap = max_k > 0 ? max_k : 1000000;

    VnTable table;
    table.n = n;
    table.log_vn.resize(n);
    for (int w = 1; w <= n; ++w) {
        double acc = kNegInf;
        double prev_term = kNegInf;
        int below = 0;
        for (long k = w; k <= cap; ++k) {
            // k_(w) / (gamma k)^(n) p(k), all in logs
            const double log_term = std::lgamma(k + 1.0) -
                                    std::lgamma(k - w + 1.0) +
                                    std::lgamma(gamma * k) -
                                    std::lgamma(gamma * k + n) +
                                    priors.k_prior.log_pmf(static_cast<int>(k));
            acc = log_add_exp(acc, log_term);
            // Stop once terms are decreasing and negligible, twice in a row.
            if (log_term < prev_term && log_term < log_tol + acc) {
                if (++below >= 2) break;
            } else {
                below = 0;
            }
            prev_term = log_term;
        }
        if (acc == kNegInf)
            throw NumericalError("V_n(" + std::to_string(w) +
                                 "): series summed to zero");
        table.log_vn[w - 1] = acc;
    }
    return table;
}

BlockStats make_block_stats(const std::vector<double>& values)
{
    BlockStats s;
    s.count = static_cast<long>(values.size());
    if (s.count == 0) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(s.count);
    if (s.count >= 2) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.var = ss / static_cast<double>(s.count - 1);
    }
    return s;
}

BlockStats pair_block_stats(const TransformedSimilarity& S,
                            const std::vector<int>& z, int r, int s)
{
    const int n = static_cast<int>(z.size());
    std::vector<double> values;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const int a = std::min(z[i], z[j]);
            const int b = std::max(z[i], z[j]);
            if (a == std::min(r, s) && b == std::max(r, s))
                values.push_back(S.S(i, j));
        }
    return make_block_stats(values);
}

BlockStats row_block_stats(const TransformedSimilarity& S,
                           const std::vector<int>& z, int i, int t)
{
    const int n = static_cast<int>(z.size());
    std::vector<double> values;
    for (int j = 0; j < n; ++j)
        if (j != i && z[j] == t) values.push_back(S.S(i, j));
    return make_block_stats(values);
}

namespace {
// Posterior Gamma rate for a block: beta plus scatter plus shrinkage terms.
double posterior_rate(const BlockStats& stats, const MfmPriors& priors)
{
    const double n = static_cast<double>(stats.count);
    double rate = priors.beta;
    if (stats.count >= 2) rate += (n - 1.0) * stats.var / 2.0;
    if (stats.count >= 1) {
        const double dm = stats.mean - priors.mu0_value();
        rate += priors.k0 * n * dm * dm / (2.0 * (priors.k0 + n));
    }
    return rate;
}
} // namespace

double sample_block_precision(const BlockStats& stats, const MfmPriors& priors,
                              Rng& rng)
{
    const double shape = priors.alpha + static_cast<double>(stats.count) / 2.0;
    const double rate = posterior_rate(stats, priors);
    if (!(rate > 0.0)) throw NumericalError("block precision: rate must be > 0");
    std::gamma_distribution<double> dist(shape, 1.0 / rate);
    return dist(rng);
}

double sample_block_mean(const BlockStats& stats, double precision,
                         const MfmPriors& priors, Rng& rng)
{
    if (!(precision > 0.0))
        throw NumericalError("block mean: precision must be > 0");
    const double n = static_cast<double>(stats.count);
    const double center =
        (priors.k0 * priors.mu0_value() + n * stats.mean) / (priors.k0 + n);
    const double sd = 1.0 / std::sqrt((priors.k0 + n) * precision);
    std::normal_distribution<double> dist(center, sd);
    return dist(rng);
}

double log_marginal_row(const TransformedSimilarity& S,
                        const std::vector<int>& z, int i,
                        const MfmPriors& priors)
{
    const int n = static_cast<int>(z.size());
    int k = 0;
    for (int j = 0; j < n; ++j)
        if (j != i) k = std::max(k, z[j]);

    double log_m = 0.0;
    for (int t = 1; t <= k; ++t) {
        const BlockStats stats = row_block_stats(S, z, i, t);
        if (stats.count == 0) continue;
        const double nt = static_cast<double>(stats.count);
        const double alpha_n = priors.alpha + nt / 2.0;
        const double beta_n = posterior_rate(stats, priors);
        log_m += std::lgamma(alpha_n) - std::lgamma(priors.alpha) +
                 priors.alpha * std::log(priors.beta) -
                 alpha_n * std::log(beta_n) +
                 0.5 * std::log(priors.k0 / (priors.k0 + nt)) -
                 nt / 2.0 * kLogTwoPi;
    }
    return log_m;
}

std::vector<int> ClusterState::group_sizes() const
{
    std::vector<int> sizes(group_count(), 0);
    for (int label : z) {
        if (label < 1 || label > group_count())
            throw NumericalError("cluster state: label out of range");
        ++sizes[label - 1];
    }
    return sizes;
}

void ClusterState::validate() const
{
    if (U.rows() != U.cols() || T.rows() != T.cols() || U.rows() != T.rows())
        throw NumericalError("cluster state: block matrices must be square");
    const auto sizes = group_sizes();
    for (int s : sizes)
        if (s == 0) throw NumericalError("cluster state: empty label");
    for (int r = 0; r < group_count(); ++r)
        for (int s = 0; s < group_count(); ++s) {
            if (U(r, s) != U(s, r) || T(r, s) != T(s, r))
                throw NumericalError("cluster state: block matrices not symmetric");
            if (!(T(r, s) > 0.0))
                throw NumericalError("cluster state: precisions must be > 0");
        }
}

ClusterState single_group_state(int n, const MfmPriors& priors)
{
    if (n < 1) throw InputError("cluster state: need at least one pattern");
    ClusterState state;
    state.z.assign(n, 1);
    state.U = Eigen::MatrixXd::Constant(1, 1, priors.mu0_value());
    state.T = Eigen::MatrixXd::Constant(1, 1, priors.alpha / priors.beta);
    return state;
}

namespace {

// Drops group label `g` (1-based) from the state: removes its U/T row and
// column and shifts higher labels down. The caller guarantees it is empty.
void remove_group(ClusterState& state, int g)
{
    const int k = state.group_count();
    Eigen::MatrixXd U(k - 1, k - 1), T(k - 1, k - 1);
    for (int r = 0, rr = 0; r < k; ++r) {
        if (r == g - 1) continue;
        for (int c = 0, cc = 0; c < k; ++c) {
            if (c == g - 1) continue;
            U(rr, cc) = state.U(r, c);
            T(rr, cc) = state.T(r, c);
            ++cc;
        }
        ++rr;
    }
    state.U = std::move(U);
    state.T = std::move(T);
    for (int& label : state.z)
        if (label > g) --label;
}

// Grows U/T by one row/column for a new group containing only pattern i,
// drawing each block parameter from its conjugate conditional.
void append_group(ClusterState& state, const TransformedSimilarity& S, int i,
                  const MfmPriors& priors, Rng& rng)
{
    const int k = state.group_count();
    Eigen::MatrixXd U(k + 1, k + 1), T(k + 1, k + 1);
    U.topLeftCorner(k, k) = state.U;
    T.topLeftCorner(k, k) = state.T;
    for (int t = 1; t <= k; ++t) {
        const BlockStats stats = row_block_stats(S, state.z, i, t);
        const double prec = sample_block_precision(stats, priors, rng);
        const double mean = sample_block_mean(stats, prec, priors, rng);
        T(k, t - 1) = T(t - 1, k) = prec;
        U(k, t - 1) = U(t - 1, k) = mean;
    }
    const BlockStats empty{};
    const double prec = sample_block_precision(empty, priors, rng);
    T(k, k) = prec;
    U(k, k) = sample_block_mean(empty, prec, priors, rng);
    state.U = std::move(U);
    state.T = std::move(T);
}

} // namespace

MembershipMove update_membership(ClusterState& state,
                                 const TransformedSimilarity& S, int i,
                                 const VnTable& vn, const MfmPriors& priors,
                                 Rng& rng)
{
    const int n = static_cast<int>(state.z.size());
    if (i < 0 || i >= n) throw InputError("membership update: index out of range");

    // Detach pattern i; its old group may disappear.
    const int old = state.z[i];
    state.z[i] = 0;
    bool occupied = false;
    for (int j = 0; j < n; ++j)
        if (j != i && state.z[j] == old) occupied = true;
    if (!occupied) remove_group(state, old);

    const int k = state.group_count();
    std::vector<int> sizes(k, 0);
    for (int j = 0; j < n; ++j)
        if (j != i) ++sizes[state.z[j] - 1];

    // Urn weights in log space: existing tables then one new table.
    std::vector<double> logw(k + 1);
    for (int c = 1; c <= k; ++c) {
        double lw = std::log(sizes[c - 1] + priors.gamma);
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const int t = state.z[j];
            lw += log_normal_pdf(S.S(i, j), state.U(c - 1, t - 1),
                                 state.T(c - 1, t - 1));
        }
        logw[c - 1] = lw;
    }
    logw[k] = vn.log_ratio(k) + std::log(priors.gamma) +
              log_marginal_row(S, state.z, i, priors);

    const double m = *std::max_element(logw.begin(), logw.end());
    double total = 0.0;
    for (double& w : logw) {
        w = std::exp(w - m);
        total += w;
    }
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng) * total;
    int choice = k; // fall through to the new table
    double cum = 0.0;
    for (int c = 0; c <= k; ++c) {
        cum += logw[c];
        if (u <= cum) {
            choice = c;
            break;
        }
    }

    MembershipMove move;
    if (choice < k) {
        state.z[i] = choice + 1;
        move.group = choice + 1;
    } else {
        append_group(state, S, i, priors, rng);
        state.z[i] = k + 1;
        move.group = k + 1;
        move.created = true;
    }
    return move;
}

ClusterState gibbs_sweep(ClusterState state, const TransformedSimilarity& S,
                         const VnTable& vn, const MfmPriors& priors, Rng& rng)
{
    const int n = static_cast<int>(state.z.size());
    const int k = state.group_count();

    // Refresh block precisions, then block means, over unordered labels.
    std::vector<BlockStats> stats(static_cast<std::size_t>(k) * k);
    for (int r = 1; r <= k; ++r)
        for (int s = r; s <= k; ++s)
            stats[(r - 1) * k + (s - 1)] = pair_block_stats(S, state.z, r, s);
    for (int r = 1; r <= k; ++r)
        for (int s = r; s <= k; ++s) {
            const double prec =
                sample_block_precision(stats[(r - 1) * k + (s - 1)], priors, rng);
            state.T(r - 1, s - 1) = state.T(s - 1, r - 1) = prec;
        }
    for (int r = 1; r <= k; ++r)
        for (int s = r; s <= k; ++s) {
            const double mean = sample_block_mean(
                stats[(r - 1) * k + (s - 1)], state.T(r - 1, s - 1), priors, rng);
            state.U(r - 1, s - 1) = state.U(s - 1, r - 1) = mean;
        }

    for (int i = 0; i < n; ++i) update_membership(state, S, i, vn, priors, rng);
    return state;
}

PosteriorDraws run_chain(const TransformedSimilarity& S,
                         const MfmPriors& priors_in, const McmcOptions& options)
{
    if (options.burnin < 0 || options.iters <= options.burnin)
        throw InputError("chain: require iters > burnin >= 0");
    const MfmPriors priors = resolve_priors(priors_in, S);
    const int n = S.size();
    const VnTable vn = compute_log_vn(n, priors);

    Rng rng = make_rng(options.seed);
    ClusterState state = single_group_state(n, priors);

    PosteriorDraws draws;
    draws.seed = options.seed;
    draws.iters = options.iters;
    draws.burnin = options.burnin;
    draws.partitions.reserve(options.iters - options.burnin);
    for (int iter = 0; iter < options.iters; ++iter) {
        state = gibbs_sweep(std::move(state), S, vn, priors, rng);
        if (iter >= options.burnin) {
            draws.partitions.push_back(state.z);
            draws.k_per_draw.push_back(state.group_count());
        }
    }
    return draws;
}

DahlSummary dahl_summary(const PosteriorDraws& draws)
{
    const int b = draws.draws();
    if (b == 0) throw InputError("Dahl summary: no retained draws");
    const int n = static_cast<int>(draws.partitions.front().size());

    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(n, n);
    for (const auto& z : draws.partitions)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (z[i] == z[j]) mean(i, j) += 1.0;
    mean /= static_cast<double>(b);

    DahlSummary best;
    best.distance = std::numeric_limits<double>::infinity();
    for (int l = 0; l < b; ++l) {
        const auto& z = draws.partitions[l];
        double dist = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double d = (z[i] == z[j] ? 1.0 : 0.0) - mean(i, j);
                dist += d * d;
            }
        if (dist < best.distance) {
            best.distance = dist;
            best.c_ls_index = l + 1;
            best.partition = z;
        }
    }
    return best;
}

std::map<int, double> posterior_k_histogram(const PosteriorDraws& draws)
{
    if (draws.draws() == 0) throw InputError("k histogram: no retained draws");
    std::map<int, double> hist;
    for (int k : draws.k_per_draw) hist[k] += 1.0;
    for (auto& [k, v] : hist) v /= static_cast<double>(draws.draws());
    return hist;
}

} // namespace ppgroup
