#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace ybsim {

struct DataSeries {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> sigma_y;  // empty = unweighted
    std::string x_label = "x";
    std::string y_label = "y";

    std::size_t size() const { return x.size(); }
    void validate(bool require_increasing_x = false) const;
};

struct FitResult {
    std::vector<std::string> names;
    Eigen::VectorXd values;
    Eigen::MatrixXd covariance;
    double chi2_reduced = 0;
    bool converged = false;
    bool degenerate = false;
    int iterations = 0;
    std::string diagnostic;

    double value(const std::string& name) const;
    double error(const std::string& name) const;  // sqrt of diagonal
};

using ModelFn =
    std::function<double(double x, const Eigen::VectorXd& params)>;

// Damped Gauss-Newton (Levenberg-style) least squares with central-difference
// Jacobians; converges on relative parameter change < 1e-8 or 200 iterations.
FitResult fit_least_squares(const DataSeries& series, const ModelFn& model,
                            const Eigen::VectorXd& initial,
                            const std::vector<std::string>& names);

// y = A exp(-b x) + c
FitResult fit_exponential_decay(const DataSeries& series);

// Saturation curve p(b) = 2 b p_sat / (gammaR - 2 b), fitted with power as
// the dependent variable; gammaR is kept above 2 max(b) by an internal
// log reparameterization.
struct BranchingFitResult {
    FitResult fit;           // parameters p_sat, gammaR
    double r = 0;            // gammaR / gamma
    double r_err = 0;        // fit covariance plus gamma uncertainty
    double gamma_per_s = 0;  // gamma used for the conversion
};
BranchingFitResult fit_branching_saturation(const DataSeries& series,
                                            double gamma_per_s,
                                            double gamma_rel_err = 0.09 / 8.07);

// y = offset + A cos(2 pi f x + phi); frequency seeded by a periodogram.
FitResult fit_sinusoid(const DataSeries& series);

// A(T) = A0 exp(-(T/tau)^2)
FitResult fit_gaussian_decay(const DataSeries& series);

}  // namespace ybsim
