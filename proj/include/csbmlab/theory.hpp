#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace csbmlab {

inline double erf(double x) { return std::erf(x); }

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Conditioning data for the one-layer accuracy formula: feature separation,
/// angle between the weight vector and the mean direction, and the signed
/// neighbour counts of the query node.
struct OneLayerQuery {
    double mu = 0.0;
    double theta = 0.0;
    int n_in = 0;
    int n_out = 0;

    void validate() const {
        if (mu < 0) throw std::invalid_argument("mu must be non-negative");
        if (n_in < 0 || n_out < 0)
            throw std::invalid_argument("neighbour counts must be non-negative");
    }
};

/// Mean and variance of the pre-sign embedding along W for unit-variance
/// features; scale the variance by sigma^2 externally for general noise.
inline std::pair<double, double> embedding_moments(const OneLayerQuery& q, double w_norm) {
    q.validate();
    if (!(w_norm > 0)) throw std::invalid_argument("w_norm must be positive");
    const double mean = q.mu * (q.n_in - q.n_out) * w_norm * std::cos(q.theta);
    const double variance = w_norm * w_norm * (q.n_in + q.n_out);
    return {mean, variance};
}

/// Accuracy conditioned on the neighbour counts. Isolated nodes score 0.5
/// (coin-flip convention for the sign tie).
inline double conditional_accuracy(const OneLayerQuery& q) {
    q.validate();
    const int total = q.n_in + q.n_out;
    if (total == 0) return 0.5;
    const double arg =
        q.mu * (q.n_in - q.n_out) * std::cos(q.theta) / std::sqrt(2.0 * total);
    return 0.5 * (erf(arg) + 1.0);
}

namespace detail {

inline std::vector<double> binomial_pmf_vector(int m, double p) {
    if (m < 0) throw std::invalid_argument("binomial count must be non-negative");
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("probability out of range");
    std::vector<double> pmf(static_cast<std::size_t>(m) + 1, 0.0);
    if (p == 0.0) {
        pmf[0] = 1.0;
        return pmf;
    }
    if (p == 1.0) {
        pmf[static_cast<std::size_t>(m)] = 1.0;
        return pmf;
    }
    const double lp = std::log(p), lq = std::log1p(-p);
    const double lgm = std::lgamma(m + 1.0);
    for (int kk = 0; kk <= m; ++kk)
        pmf[static_cast<std::size_t>(kk)] =
            std::exp(lgm - std::lgamma(kk + 1.0) - std::lgamma(m - kk + 1.0) +
                     kk * lp + (m - kk) * lq);
    return pmf;
}

}  // namespace detail

/// Expected accuracy of the one-layer model: the conditional formula averaged
/// over Binomial(N/2, p_in) x Binomial(N/2, p_out) neighbour counts.
inline double expected_accuracy_one_layer(double mu, double theta, int n_nodes,
                                          double p_in, double p_out) {
    if (mu < 0) throw std::invalid_argument("mu must be non-negative");
    if (n_nodes <= 0 || n_nodes % 2 != 0)
        throw std::invalid_argument("N must be positive and even");
    const int m = n_nodes / 2;
    const std::vector<double> pin = detail::binomial_pmf_vector(m, p_in);
    const std::vector<double> pout = detail::binomial_pmf_vector(m, p_out);
    const double cos_theta = std::cos(theta);
    double acc = 0.0;
    for (int a = 0; a <= m; ++a) {
        if (pin[static_cast<std::size_t>(a)] == 0.0) continue;
        double row = 0.0;
        for (int b = 0; b <= m; ++b) {
            const double w = pout[static_cast<std::size_t>(b)];
            if (w == 0.0) continue;
            double cond;
            if (a + b == 0) {
                cond = 0.5;
            } else {
                cond = 0.5 * (erf(mu * (a - b) * cos_theta / std::sqrt(2.0 * (a + b))) + 1.0);
            }
            row += w * cond;
        }
        acc += pin[static_cast<std::size_t>(a)] * row;
    }
    return acc;
}

/// Endpoint comparison for the weight angle. The two candidate maximizers are
/// theta = 0 and theta = pi; this evaluates both and reports the winner rather
/// than hard-coding either.
struct OptimalTheta {
    double theta_star;  // NaN when degenerate
    double acc_at_0;
    double acc_at_pi;
    bool degenerate;    // p_in == p_out: every theta gives 0.5
};

inline OptimalTheta optimal_theta(double mu, int n_nodes, double p_in, double p_out) {
    const double a0 = expected_accuracy_one_layer(mu, 0.0, n_nodes, p_in, p_out);
    const double api =
        expected_accuracy_one_layer(mu, std::acos(-1.0), n_nodes, p_in, p_out);
    if (p_in == p_out)
        return {std::numeric_limits<double>::quiet_NaN(), a0, api, true};
    return {a0 >= api ? 0.0 : std::acos(-1.0), a0, api, false};
}

inline double poisson_pmf(int kk, double rate) {
    if (kk < 0) throw std::invalid_argument("k must be non-negative");
    if (rate < 0) throw std::invalid_argument("rate must be non-negative");
    if (rate == 0.0) return kk == 0 ? 1.0 : 0.0;
    return std::exp(kk * std::log(rate) - rate - std::lgamma(kk + 1.0));
}

/// The two-layer decision statistic's normalized mean: c is the signed
/// signal-to-noise ratio sgn(K) mu / sigma.
inline double psi(double c, int n_in, int n_out, int n2_in, int n2_out) {
    if (n_in < 0 || n_out < 0 || n2_in < 0 || n2_out < 0)
        throw std::invalid_argument("counts must be non-negative");
    const double s1 = n_in + n_out;
    const double numer = c * (1.0 + 3.0 * n_in - n_out + n2_in - n2_out);
    const double denom = std::sqrt((s1 + 1.0) * (s1 + 1.0) + 4.0 * s1 + (n2_in + n2_out));
    return numer / denom;
}

/// Joint probability of the local structure counts in the Poisson limit:
/// first-shell counts at rates d_in, d_out, second-shell counts at the rates
/// induced by the first shell.
inline double structure_prob(int n_in, int n_out, int n2_in, int n2_out, double d,
                             double lambda) {
    if (d <= 0) throw std::invalid_argument("d must be positive");
    const double sd = std::sqrt(d);
    if (std::abs(lambda) > sd)
        throw std::invalid_argument("|lambda| must not exceed sqrt(d)");
    const double d_in = (d + lambda * sd) / 2.0;
    const double d_out = (d - lambda * sd) / 2.0;
    return poisson_pmf(n_in, d_in) * poisson_pmf(n_out, d_out) *
           poisson_pmf(n2_in, d_in * n_in + d_out * n_out) *
           poisson_pmf(n2_out, d_out * n_in + d_in * n_out);
}

struct TwoLayerQuery {
    double mu = 1.0;
    double sigma = 1.0;
    double d = 10.0;
    double lambda = 0.0;
    int sign_K = +1;
    double tail_mass_bound = 1e-8;

    void validate() const {
        if (mu < 0) throw std::invalid_argument("mu must be non-negative");
        if (sigma <= 0) throw std::invalid_argument("sigma must be positive");
        if (d <= 0) throw std::invalid_argument("d must be positive");
        if (std::abs(lambda) > std::sqrt(d))
            throw std::invalid_argument("|lambda| must not exceed sqrt(d)");
        if (sign_K != 1 && sign_K != -1)
            throw std::invalid_argument("sign_K must be +1 or -1");
        if (!(tail_mass_bound > 0.0 && tail_mass_bound < 1.0))
            throw std::invalid_argument("tail_mass_bound must lie in (0, 1)");
    }
};

struct TheoryResult {
    double accuracy;
    std::array<int, 4> truncation_limits;  // n_in, n_out, max n2_in, max n2_out
    double neglected_mass;
};

namespace detail {

/// Poisson pmf values 0..M where M is the smallest bound with upper-tail mass
/// below `tail`. Early terms that underflow carry mass far below any
/// admissible tail bound and are kept as zero.
inline std::vector<double> poisson_pmf_head(double rate, double tail) {
    std::vector<double> pmf;
    if (rate == 0.0) {
        pmf.push_back(1.0);
        return pmf;
    }
    const double logr = std::log(rate);
    double cum = 0.0;
    for (int kk = 0;; ++kk) {
        const double p = std::exp(kk * logr - rate - std::lgamma(kk + 1.0));
        pmf.push_back(p);
        cum += p;
        if (1.0 - cum < tail) return pmf;
        if (kk > 200000)
            throw std::runtime_error("poisson truncation bound not reached");
    }
}

}  // namespace detail

/// Truncated evaluation of the two-layer accuracy sum. The per-index bounds
/// keep the total neglected probability mass at or below tail_mass_bound:
/// each outer index gets tail/4, each inner index tail/4 conditionally.
inline TheoryResult two_layer_accuracy(const TwoLayerQuery& q) {
    q.validate();
    const double tail4 = q.tail_mass_bound / 4.0;
    const double sd = std::sqrt(q.d);
    const double d_in = (q.d + q.lambda * sd) / 2.0;
    const double d_out = (q.d - q.lambda * sd) / 2.0;
    const double c = q.sign_K * q.mu / q.sigma;

    const std::vector<double> p_first_in = detail::poisson_pmf_head(d_in, tail4);
    const std::vector<double> p_first_out = detail::poisson_pmf_head(d_out, tail4);

    int max_n2_in = 0, max_n2_out = 0;
    double mass = 0.0, acc = 0.0;
    std::vector<double> outer_partials_mass, outer_partials_acc;
    outer_partials_mass.reserve(p_first_in.size());
    outer_partials_acc.reserve(p_first_in.size());

    for (std::size_t a = 0; a < p_first_in.size(); ++a) {
        double mass_a = 0.0, acc_a = 0.0;
        for (std::size_t b = 0; b < p_first_out.size(); ++b) {
            const double p_ab = p_first_in[a] * p_first_out[b];
            if (p_ab == 0.0) continue;
            const auto n_in = static_cast<int>(a);
            const auto n_out = static_cast<int>(b);
            const double r2_in = d_in * n_in + d_out * n_out;
            const double r2_out = d_out * n_in + d_in * n_out;
            const std::vector<double> p2_in = detail::poisson_pmf_head(r2_in, tail4);
            const std::vector<double> p2_out = detail::poisson_pmf_head(r2_out, tail4);
            max_n2_in = std::max(max_n2_in, static_cast<int>(p2_in.size()) - 1);
            max_n2_out = std::max(max_n2_out, static_cast<int>(p2_out.size()) - 1);
            for (std::size_t u = 0; u < p2_in.size(); ++u) {
                if (p2_in[u] == 0.0) continue;
                for (std::size_t v = 0; v < p2_out.size(); ++v) {
                    const double p = p_ab * p2_in[u] * p2_out[v];
                    if (p == 0.0) continue;
                    mass_a += p;
                    acc_a += p * normal_cdf(psi(c, n_in, n_out, static_cast<int>(u),
                                                static_cast<int>(v)));
                }
            }
        }
        outer_partials_mass.push_back(mass_a);
        outer_partials_acc.push_back(acc_a);
    }
    for (double m : outer_partials_mass) mass += m;
    for (double x : outer_partials_acc) acc += x;

    TheoryResult result;
    result.accuracy = std::min(1.0, std::max(0.0, acc));
    result.truncation_limits = {static_cast<int>(p_first_in.size()) - 1,
                                static_cast<int>(p_first_out.size()) - 1, max_n2_in,
                                max_n2_out};
    result.neglected_mass = std::max(0.0, 1.0 - mass);
    if (result.neglected_mass > q.tail_mass_bound)
        throw std::runtime_error("two-layer truncation failed its tail bound");
    return result;
}

}  // namespace csbmlab
