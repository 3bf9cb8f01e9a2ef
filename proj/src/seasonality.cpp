#include "gasrl/seasonality.hpp"

#include "gasrl/csv.hpp"
#include "gasrl/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <string>

namespace gasrl {

void SeasonalCoefficients::validate() const {
    std::set<int> seen;
    for (const auto& term : terms) {
        if (term.harmonic <= 0 || 12 % term.harmonic != 0) {
            throw ConfigError("seasonal.harmonic: " + std::to_string(term.harmonic) +
                              " is not a positive divisor of 12");
        }
        if (!seen.insert(term.harmonic).second) {
            throw ConfigError("seasonal.harmonic: duplicate harmonic " + std::to_string(term.harmonic));
        }
        if (!std::isfinite(term.a) || !std::isfinite(term.b)) {
            throw ConfigError("seasonal: non-finite coefficient for harmonic " + std::to_string(term.harmonic));
        }
    }
}

std::vector<int> SeasonalCoefficients::harmonics() const {
    std::vector<int> out;
    out.reserve(terms.size());
    for (const auto& term : terms) out.push_back(term.harmonic);
    return out;
}

double month_phase(long t) {
    long m = t % 12;
    if (m < 0) m += 12;
    return 2.0 * std::numbers::pi * static_cast<double>(m) / 12.0;
}

double seasonal_value(const SeasonalCoefficients& coeffs, long t) {
    const double phi = month_phase(t);
    double s = 0.0;
    for (const auto& term : coeffs.terms) {
        const double x = phi * term.harmonic;
        s += term.a * std::cos(x) + term.b * std::sin(x);
    }
    return s;
}

SeasonalCoefficients fit_coefficients(std::span<const MonthlyObservation> series,
                                      std::span<const int> harmonics) {
    SeasonalCoefficients result;
    for (int k : harmonics) result.terms.push_back({k, 0.0, 0.0});
    result.validate();

    const auto n = static_cast<Eigen::Index>(series.size());
    const auto p = static_cast<Eigen::Index>(2 * harmonics.size());
    if (n < p) {
        throw FitError("fit_coefficients: " + std::to_string(n) + " observations for " +
                       std::to_string(p) + " coefficients");
    }
    if (n == 0) return result;
    const auto [lo, hi] = std::minmax_element(series.begin(), series.end(),
                                              [](const auto& x, const auto& y) { return x.t < y.t; });
    if (hi->t - lo->t + 1 < 12) {
        throw FitError("fit_coefficients: series spans fewer than 12 months");
    }

    Eigen::MatrixXd design(n, p);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double phi = month_phase(series[i].t);
        for (std::size_t j = 0; j < harmonics.size(); ++j) {
            design(i, 2 * j) = std::cos(phi * harmonics[j]);
            design(i, 2 * j + 1) = std::sin(phi * harmonics[j]);
        }
        y(i) = series[i].value;
    }

    // Columns that are zero on the integer grid (within rounding of sin(pi t)).
    std::vector<Eigen::Index> active;
    for (Eigen::Index j = 0; j < p; ++j) {
        if (design.col(j).cwiseAbs().maxCoeff() > 1e-9) active.push_back(j);
    }
    Eigen::MatrixXd x(n, static_cast<Eigen::Index>(active.size()));
    for (std::size_t j = 0; j < active.size(); ++j) x.col(static_cast<Eigen::Index>(j)) = design.col(active[j]);

    const Eigen::MatrixXd gram = x.transpose() * x;
    const Eigen::VectorXd rhs = x.transpose() * y;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(gram);
    qr.setThreshold(1e-10);
    if (qr.rank() < gram.cols()) {
        throw FitError("fit_coefficients: rank-deficient design (rank " + std::to_string(qr.rank()) + " of " +
                       std::to_string(gram.cols()) + ")");
    }
    const Eigen::VectorXd beta = qr.solve(rhs);

    Eigen::VectorXd full = Eigen::VectorXd::Zero(p);
    for (std::size_t j = 0; j < active.size(); ++j) full(active[j]) = beta(static_cast<Eigen::Index>(j));
    for (std::size_t j = 0; j < harmonics.size(); ++j) {
        result.terms[j].a = full(2 * j);
        result.terms[j].b = full(2 * j + 1);
    }
    return result;
}

std::vector<double> reference_log_demand_profile() {
    // Winter peak in December-January, trough in August; 0.5 peak to trough.
    std::vector<double> profile{0.25, 0.19, 0.07, -0.07, -0.17, -0.21, -0.20, -0.25, -0.18, -0.05, 0.12, 0.23};
    double mean = 0.0;
    for (double v : profile) mean += v;
    mean /= static_cast<double>(profile.size());
    for (double& v : profile) v -= mean;
    return profile;
}

SeasonalCoefficients default_seasonal_coefficients() {
    static const SeasonalCoefficients coeffs = [] {
        const auto profile = reference_log_demand_profile();
        std::vector<MonthlyObservation> series;
        for (std::size_t t = 0; t < profile.size(); ++t) series.push_back({static_cast<long>(t), profile[t]});
        const int harmonics[] = {1, 2, 3, 4, 6};
        return fit_coefficients(series, harmonics);
    }();
    return coeffs;
}

SeasonalCoefficients load_seasonal_coefficients(const std::filesystem::path& path) {
    const CsvTable table = read_csv(path);
    const auto h = table.column_index("harmonic");
    const auto a = table.column_index("a");
    const auto b = table.column_index("b");
    SeasonalCoefficients coeffs;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        SeasonalCoefficients::Term term;
        const double k = table.number(r, h);
        if (k != std::floor(k)) throw DataError(path.string() + ": harmonic must be an integer");
        term.harmonic = static_cast<int>(k);
        term.a = table.number(r, a);
        term.b = table.number(r, b);
        coeffs.terms.push_back(term);
    }
    try {
        coeffs.validate();
    } catch (const ConfigError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    return coeffs;
}

void save_seasonal_coefficients(const SeasonalCoefficients& coeffs, const std::filesystem::path& path) {
    CsvTable table;
    table.header = {"harmonic", "a", "b"};
    for (const auto& term : coeffs.terms) {
        table.rows.push_back({std::to_string(term.harmonic), format_double(term.a), format_double(term.b)});
    }
    write_csv_atomic(table, path);
}

}  // namespace gasrl
