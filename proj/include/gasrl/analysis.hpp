#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace gasrl::analysis {

/// Monthly prices indexed by month number (t = 0 is January).
struct PriceSeries {
    std::vector<long> months;
    std::vector<double> prices;
    std::string label;

    std::size_t size() const { return prices.size(); }
    /// Throws DataError unless prices > 0 and months strictly increase.
    void validate() const;
};

/// Log-price first differences tagged with the calendar month (1-12) of the later observation.
struct LabeledDiffs {
    std::vector<double> values;
    std::vector<int> months;
};

std::vector<double> log_diffs(const PriceSeries& series);
LabeledDiffs labeled_log_diffs(const PriceSeries& series);
/// Concatenates the differences of several series (no difference across series boundaries).
LabeledDiffs pooled_log_diffs(std::span<const PriceSeries> series);

struct SeasonalityEstimate {
    std::array<double, 12> coefficients{};     // January first
    std::array<double, 12> standard_errors{};
    std::array<std::size_t, 12> counts{};
    std::string method = "monthly-dummies-ols";

    /// Calendar month (1-12) with the largest coefficient.
    int peak_month() const;
};

/// OLS on twelve month indicators without intercept. Throws FitError naming any empty month.
SeasonalityEstimate seasonal_regression(const LabeledDiffs& diffs);

/// Sample standard deviation (n - 1 denominator).
double volatility_std(std::span<const double> values);

/// Silverman rule-of-thumb bandwidth 1.06 * sd * n^(-1/5).
double silverman_bandwidth(std::span<const double> values);
/// Gaussian kernel density evaluated on `grid`. Throws DataError on zero-variance input.
std::vector<double> kde(std::span<const double> values, std::span<const double> grid);

struct MeanCi {
    double mean = 0.0;
    double half_width = 0.0;
    double lower() const { return mean - half_width; }
    double upper() const { return mean + half_width; }
};

/// Normal-approximation interval mean +/- z * sd / sqrt(n), with sd using the n denominator;
/// only level 0.95 (z = 1.96) and 0.99 (z = 2.576) are tabulated.
MeanCi mean_ci(std::span<const double> samples, double level = 0.95);
double mean(std::span<const double> samples);
double standard_error(std::span<const double> samples);

/// Pointwise mean of aligned series. Throws AlignmentError on length/month mismatch.
PriceSeries average_series(std::span<const PriceSeries> series);

/// 2-column CSV `date,price` with ISO dates (YYYY-MM-DD or YYYY-MM). Months are
/// numbered so that January of any year maps to a multiple of 12.
PriceSeries load_external_prices(const std::filesystem::path& path);
/// `price` column of an episode trace CSV, indexed by its `t` column.
PriceSeries load_trace_prices(const std::filesystem::path& path);

std::vector<double> linspace(double lo, double hi, std::size_t n);
double trapezoid(std::span<const double> x, std::span<const double> y);

}  // namespace gasrl::analysis
