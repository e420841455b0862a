#include "ybsim/fit.hpp"

#include <cmath>
#include <complex>
#include <limits>

#include "ybsim/errors.hpp"

namespace ybsim {

void DataSeries::validate(bool require_increasing_x) const {
    if (x.size() != y.size()) {
        throw ConstraintViolation("x and y must have equal length");
    }
    if (!sigma_y.empty()) {
        if (sigma_y.size() != y.size()) {
            throw ConstraintViolation("sigma_y length mismatch");
        }
        for (double s : sigma_y) {
            if (!(s > 0)) throw ConstraintViolation("sigma_y must be > 0");
        }
    }
    if (require_increasing_x) {
        for (std::size_t i = 1; i < x.size(); ++i) {
            if (!(x[i] > x[i - 1])) {
                throw ConstraintViolation("x must be strictly increasing");
            }
        }
    }
}

double FitResult::value(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return values[static_cast<int>(i)];
    }
    throw FitError("unknown fit parameter " + name);
}

double FitResult::error(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) {
            const int k = static_cast<int>(i);
            return std::sqrt(std::max(0.0, covariance(k, k)));
        }
    }
    throw FitError("unknown fit parameter " + name);
}

namespace {

Eigen::VectorXd residuals(const DataSeries& d, const ModelFn& model,
                          const Eigen::VectorXd& params) {
    const int n = static_cast<int>(d.size());
    Eigen::VectorXd r(n);
    for (int i = 0; i < n; ++i) {
        const double w = d.sigma_y.empty() ? 1.0 : 1.0 / d.sigma_y[i];
        r[i] = (d.y[i] - model(d.x[i], params)) * w;
    }
    return r;
}

Eigen::MatrixXd numeric_jacobian(const DataSeries& d, const ModelFn& model,
                                 const Eigen::VectorXd& params) {
    const int n = static_cast<int>(d.size());
    const int p = static_cast<int>(params.size());
    Eigen::MatrixXd j(n, p);
    Eigen::VectorXd lo = params, hi = params;
    for (int k = 0; k < p; ++k) {
        const double h = 1e-6 * std::max(std::fabs(params[k]), 1e-12);
        hi[k] = params[k] + h;
        lo[k] = params[k] - h;
        for (int i = 0; i < n; ++i) {
            const double w = d.sigma_y.empty() ? 1.0 : 1.0 / d.sigma_y[i];
            // d(residual)/d(param) = -d(model)/d(param) / sigma
            j(i, k) = -w * (model(d.x[i], hi) - model(d.x[i], lo)) / (2.0 * h);
        }
        hi[k] = params[k];
        lo[k] = params[k];
    }
    return j;
}

}  // namespace

FitResult fit_least_squares(const DataSeries& series, const ModelFn& model,
                            const Eigen::VectorXd& initial,
                            const std::vector<std::string>& names) {
    series.validate();
    const int n = static_cast<int>(series.size());
    const int p = static_cast<int>(initial.size());
    if (n < p) throw InsufficientData("fewer points than parameters");

    FitResult result;
    result.names = names;

    Eigen::VectorXd params = initial;
    Eigen::VectorXd r = residuals(series, model, params);
    double ssr = r.squaredNorm();
    double damping = 1e-3;

    int iter = 0;
    for (; iter < 200; ++iter) {
        const Eigen::MatrixXd j = numeric_jacobian(series, model, params);
        const Eigen::MatrixXd jtj = j.transpose() * j;
        const Eigen::VectorXd jtr = -j.transpose() * r;

        bool stepped = false;
        double max_rel_change = 0;
        for (int attempt = 0; attempt < 25; ++attempt) {
            Eigen::MatrixXd damped = jtj;
            for (int k = 0; k < p; ++k) {
                damped(k, k) += damping * std::max(jtj(k, k), 1e-30);
            }
            const Eigen::VectorXd step = damped.ldlt().solve(jtr);
            if (!step.allFinite()) {
                damping *= 10;
                continue;
            }
            const Eigen::VectorXd candidate = params + step;
            const Eigen::VectorXd rc = residuals(series, model, candidate);
            const double ssr_c = rc.squaredNorm();
            if (ssr_c <= ssr * (1.0 + 1e-14) || ssr_c < ssr + 1e-300) {
                max_rel_change = 0;
                for (int k = 0; k < p; ++k) {
                    max_rel_change = std::max(
                        max_rel_change,
                        std::fabs(step[k]) /
                            std::max(std::fabs(candidate[k]), 1e-12));
                }
                params = candidate;
                r = rc;
                ssr = ssr_c;
                damping = std::max(damping * 0.1, 1e-12);
                stepped = true;
                break;
            }
            damping *= 10;
        }
        if (!stepped) {
            result.diagnostic = "no downhill step found";
            break;
        }
        if (max_rel_change < 1e-8) {
            result.converged = true;
            break;
        }
    }
    result.iterations = iter + 1;
    if (!result.converged && result.diagnostic.empty()) {
        result.diagnostic = "iteration limit reached";
    }
    // A fully stalled optimizer that can no longer improve has effectively
    // converged to machine precision.
    if (!result.converged && result.diagnostic == "no downhill step found") {
        result.converged = true;
        result.diagnostic = "converged at numeric floor";
    }

    result.values = params;
    const Eigen::MatrixXd j = numeric_jacobian(series, model, params);
    Eigen::MatrixXd jtj = j.transpose() * j;
    for (int k = 0; k < p; ++k) jtj(k, k) += 1e-300;
    Eigen::MatrixXd cov = jtj.inverse();
    const int dof = std::max(1, n - p);
    result.chi2_reduced = ssr / dof;
    if (series.sigma_y.empty()) {
        cov *= result.chi2_reduced;  // scale by residual variance
    }
    result.covariance = cov;
    return result;
}

FitResult fit_exponential_decay(const DataSeries& series) {
    series.validate(true);
    if (series.size() < 4) {
        throw InsufficientData("exponential fit needs at least 4 points");
    }
    const int n = static_cast<int>(series.size());
    double y_max = series.y[0], y_min = series.y[0];
    for (double v : series.y) {
        y_max = std::max(y_max, v);
        y_min = std::min(y_min, v);
    }
    const double scale = std::max(std::fabs(y_max), std::fabs(y_min));
    const double span = series.x.back() - series.x.front();

    // Background from the tail, decay rate from a log-linear regression on
    // the background-subtracted values.
    double c0 = 0;
    const int tail = std::max(1, n / 10);
    for (int i = n - tail; i < n; ++i) c0 += series.y[i];
    c0 /= tail;

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (int i = 0; i < n; ++i) {
        const double v = series.y[i] - c0;
        if (v > 1e-12 * std::max(scale, 1.0)) {
            const double ly = std::log(v);
            sx += series.x[i];
            sy += ly;
            sxx += series.x[i] * series.x[i];
            sxy += series.x[i] * ly;
            ++m;
        }
    }
    double b0 = 1.0 / std::max(span, 1e-300);
    double a0 = y_max - c0;
    if (m >= 2) {
        const double denom = m * sxx - sx * sx;
        if (std::fabs(denom) > 0) {
            const double slope = (m * sxy - sx * sy) / denom;
            const double inter = (sy - slope * sx) / m;
            if (slope < 0) b0 = -slope;
            a0 = std::exp(inter);
        }
    }

    Eigen::VectorXd init(3);
    init << a0, b0, c0;
    auto model = [](double x, const Eigen::VectorXd& q) {
        return q[0] * std::exp(-q[1] * x) + q[2];
    };
    FitResult result =
        fit_least_squares(series, model, init, {"A", "b", "c"});
    const double a = result.value("A");
    const double b = result.value("b");
    if (std::fabs(a) <= 1e-8 * std::max(scale, 1.0) || b * span < 1e-6) {
        result.degenerate = true;
        if (result.diagnostic.empty()) result.diagnostic = "no decay resolved";
    }
    return result;
}

BranchingFitResult fit_branching_saturation(const DataSeries& series,
                                            double gamma_per_s,
                                            double gamma_rel_err) {
    series.validate();
    if (series.size() < 3) {
        throw InsufficientData("saturation fit needs at least 3 points");
    }
    double b_max = 0;
    for (double b : series.x) b_max = std::max(b_max, b);
    if (!(b_max > 0)) throw ConstraintViolation("decay rates must be positive");

    // Reciprocal-linear initializer: 1/p = gammaR/(2 p_sat) (1/b) - 1/p_sat.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int n = static_cast<int>(series.size());
    for (int i = 0; i < n; ++i) {
        const double ix = 1.0 / series.x[i];
        const double iy = 1.0 / series.y[i];
        sx += ix;
        sy += iy;
        sxx += ix * ix;
        sxy += ix * iy;
    }
    const double denom = n * sxx - sx * sx;
    double gamma_r0 = 2.5 * b_max;
    double p_sat0 = series.y[0];
    if (std::fabs(denom) > 0) {
        const double slope = (n * sxy - sx * sy) / denom;
        const double inter = (sy - slope * sx) / n;
        if (inter < 0 && slope > 0) {
            p_sat0 = -1.0 / inter;
            gamma_r0 = 2.0 * slope * p_sat0;
        }
    }
    if (!(gamma_r0 > 2.0 * b_max)) gamma_r0 = 2.0 * b_max * 1.2;

    // gammaR = 2 b_max + exp(u) keeps every iterate clear of the pole.
    Eigen::VectorXd init(2);
    init << p_sat0, std::log(gamma_r0 - 2.0 * b_max);
    const double bm = b_max;
    auto model = [bm](double b, const Eigen::VectorXd& q) {
        const double gamma_r = 2.0 * bm + std::exp(q[1]);
        return 2.0 * b * q[0] / (gamma_r - 2.0 * b);
    };
    FitResult internal =
        fit_least_squares(series, model, init, {"p_sat", "u"});

    BranchingFitResult out;
    out.gamma_per_s = gamma_per_s;
    const double eu = std::exp(internal.value("u"));
    const double gamma_r = 2.0 * b_max + eu;

    // Map (p_sat, u) covariance to (p_sat, gammaR).
    Eigen::MatrixXd jac = Eigen::MatrixXd::Identity(2, 2);
    jac(1, 1) = eu;
    out.fit = internal;
    out.fit.names = {"p_sat", "gammaR"};
    out.fit.values = Eigen::VectorXd(2);
    out.fit.values << internal.value("p_sat"), gamma_r;
    out.fit.covariance = jac * internal.covariance * jac.transpose();

    out.r = gamma_r / gamma_per_s;
    const double gr_err = out.fit.error("gammaR");
    out.r_err = std::hypot(gr_err / gamma_per_s, out.r * gamma_rel_err);
    return out;
}

FitResult fit_sinusoid(const DataSeries& series) {
    series.validate();
    const int n = static_cast<int>(series.size());
    if (n < 8) throw InsufficientData("sinusoid fit needs at least 8 points");
    const double span = series.x.back() - series.x.front();
    if (!(span > 0)) throw ConstraintViolation("x span must be positive");

    double mean = 0;
    for (double v : series.y) mean += v;
    mean /= n;
    double var = 0;
    for (double v : series.y) var += (v - mean) * (v - mean);
    var /= n;

    // Coarse periodogram for the starting frequency, scanned up to the
    // Nyquist limit of the mean sample spacing.
    double best_power = -1, f0 = 1.0 / span;
    std::complex<double> best_z(0, 0);
    const int k_max = n - 1;  // f_max = (n-1) / (2 span) = 1 / (2 dx)
    for (int k = 1; k <= k_max; ++k) {
        const double f = static_cast<double>(k) / (2.0 * span);
        std::complex<double> z(0, 0);
        for (int i = 0; i < n; ++i) {
            const double ph = -2.0 * M_PI * f * series.x[i];
            z += (series.y[i] - mean) *
                 std::complex<double>(std::cos(ph), std::sin(ph));
        }
        if (std::norm(z) > best_power) {
            best_power = std::norm(z);
            f0 = f;
            best_z = z;
        }
    }
    // A flat series has no period to resolve; let it fall through to a
    // degenerate zero-amplitude fit.
    const bool flat = var <= 1e-20 * std::max(1.0, mean * mean);
    if (!flat && f0 * span < 1.0 - 1e-9) {
        throw FitError("under-constrained: data span below one period");
    }

    Eigen::VectorXd init(4);
    init << std::sqrt(2.0 * var), f0, std::arg(best_z), mean;
    auto model = [](double x, const Eigen::VectorXd& q) {
        return q[3] + q[0] * std::cos(2.0 * M_PI * q[1] * x + q[2]);
    };
    FitResult result = fit_least_squares(series, model, init,
                                         {"A", "f", "phi", "offset"});
    const double y_scale = std::max({std::fabs(mean), std::sqrt(var), 1e-12});
    if (flat || std::fabs(result.value("A")) < 1e-6 * y_scale) {
        result.degenerate = true;
        if (result.diagnostic.empty()) {
            result.diagnostic = "no oscillation resolved";
        }
    }
    return result;
}

FitResult fit_gaussian_decay(const DataSeries& series) {
    series.validate();
    const int n = static_cast<int>(series.size());
    if (n < 3) throw InsufficientData("gaussian decay fit needs >= 3 points");

    double a_max = series.y[0];
    double t_max = 0;
    for (int i = 0; i < n; ++i) {
        a_max = std::max(a_max, series.y[i]);
        t_max = std::max(t_max, std::fabs(series.x[i]));
    }
    if (!(t_max > 0)) throw ConstraintViolation("need a nonzero delay");

    // ln A = ln A0 - (T/tau)^2 is linear in T^2.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (int i = 0; i < n; ++i) {
        if (series.y[i] > 1e-12 * std::max(a_max, 1.0)) {
            const double t2 = series.x[i] * series.x[i];
            const double ly = std::log(series.y[i]);
            sx += t2;
            sy += ly;
            sxx += t2 * t2;
            sxy += t2 * ly;
            ++m;
        }
    }
    double tau0 = t_max;
    bool decaying = false;
    if (m >= 2) {
        const double denom = m * sxx - sx * sx;
        if (std::fabs(denom) > 0) {
            const double slope = (m * sxy - sx * sy) / denom;
            if (slope < 0) {
                tau0 = std::sqrt(-1.0 / slope);
                decaying = true;
            }
        }
    }

    Eigen::VectorXd init(2);
    init << a_max, tau0;
    auto model = [](double t, const Eigen::VectorXd& q) {
        const double z = t / q[1];
        return q[0] * std::exp(-z * z);
    };
    FitResult result = fit_least_squares(series, model, init, {"A0", "tau"});
    if (!decaying || result.value("tau") > 100.0 * t_max) {
        result.degenerate = true;
        if (result.diagnostic.empty()) result.diagnostic = "no decay resolved";
    }
    return result;
}

}  // namespace ybsim
