#include "gasrl/analysis.hpp"

#include "gasrl/csv.hpp"
#include "gasrl/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

namespace gasrl::analysis {

namespace {

int month_of(long t) {
    long m = t % 12;
    if (m < 0) m += 12;
    return static_cast<int>(m) + 1;
}

const char* kMonthNames[12] = {"January", "February", "March",     "April",   "May",      "June",
                               "July",    "August",   "September", "October", "November", "December"};

}  // namespace

void PriceSeries::validate() const {
    if (months.size() != prices.size()) throw DataError(label + ": months and prices differ in length");
    for (std::size_t i = 0; i < prices.size(); ++i) {
        if (!(prices[i] > 0.0) || !std::isfinite(prices[i])) {
            throw DomainError(label + ": non-positive or non-finite price at position " + std::to_string(i));
        }
        if (i > 0 && months[i] <= months[i - 1]) {
            throw DataError(label + ": months are not strictly increasing at position " + std::to_string(i));
        }
    }
}

std::vector<double> log_diffs(const PriceSeries& series) {
    return labeled_log_diffs(series).values;
}

LabeledDiffs labeled_log_diffs(const PriceSeries& series) {
    series.validate();
    if (series.size() < 2) throw DataError(series.label + ": need at least two prices for log differences");
    LabeledDiffs out;
    out.values.reserve(series.size() - 1);
    out.months.reserve(series.size() - 1);
    for (std::size_t i = 0; i + 1 < series.size(); ++i) {
        out.values.push_back(std::log(series.prices[i + 1]) - std::log(series.prices[i]));
        out.months.push_back(month_of(series.months[i + 1]));
    }
    return out;
}

LabeledDiffs pooled_log_diffs(std::span<const PriceSeries> series) {
    LabeledDiffs pooled;
    for (const auto& s : series) {
        const auto d = labeled_log_diffs(s);
        pooled.values.insert(pooled.values.end(), d.values.begin(), d.values.end());
        pooled.months.insert(pooled.months.end(), d.months.begin(), d.months.end());
    }
    return pooled;
}

int SeasonalityEstimate::peak_month() const {
    return static_cast<int>(std::max_element(coefficients.begin(), coefficients.end()) - coefficients.begin()) + 1;
}

SeasonalityEstimate seasonal_regression(const LabeledDiffs& diffs) {
    if (diffs.values.size() != diffs.months.size()) throw DataError("seasonal_regression: label count mismatch");
    SeasonalityEstimate est;
    std::array<double, 12> sums{};
    for (std::size_t i = 0; i < diffs.values.size(); ++i) {
        const int m = diffs.months[i];
        if (m < 1 || m > 12) throw DataError("seasonal_regression: month label out of range");
        sums[m - 1] += diffs.values[i];
        ++est.counts[m - 1];
    }
    for (int m = 0; m < 12; ++m) {
        if (est.counts[m] == 0) {
            throw FitError(std::string("seasonal_regression: no observations for ") + kMonthNames[m]);
        }
        // The dummy columns are orthogonal, so the normal equations are diagonal.
        est.coefficients[m] = sums[m] / static_cast<double>(est.counts[m]);
    }
    double rss = 0.0;
    for (std::size_t i = 0; i < diffs.values.size(); ++i) {
        const double e = diffs.values[i] - est.coefficients[diffs.months[i] - 1];
        rss += e * e;
    }
    const auto n = diffs.values.size();
    const double sigma2 = n > 12 ? rss / static_cast<double>(n - 12) : std::numeric_limits<double>::quiet_NaN();
    for (int m = 0; m < 12; ++m) {
        est.standard_errors[m] = std::sqrt(sigma2 / static_cast<double>(est.counts[m]));
    }
    return est;
}

double mean(std::span<const double> samples) {
    if (samples.empty()) throw DataError("mean: empty sample");
    return std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
}

double volatility_std(std::span<const double> values) {
    if (values.size() < 2) throw DataError("volatility_std: need at least two values");
    const double m = mean(values);
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

double standard_error(std::span<const double> samples) {
    if (samples.size() < 2) return 0.0;
    return volatility_std(samples) / std::sqrt(static_cast<double>(samples.size()));
}

double silverman_bandwidth(std::span<const double> values) {
    const double sd = volatility_std(values);
    return 1.06 * sd * std::pow(static_cast<double>(values.size()), -0.2);
}

std::vector<double> kde(std::span<const double> values, std::span<const double> grid) {
    if (values.size() < 2) throw DataError("kde: need at least two values");
    const double h = silverman_bandwidth(values);
    if (!(h > 0.0)) throw DataError("kde: degenerate data (zero variance)");
    // Sorting makes the summation order, and therefore the result, independent of input order.
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double norm = 1.0 / (static_cast<double>(sorted.size()) * h * std::sqrt(2.0 * std::numbers::pi));
    std::vector<double> density(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double acc = 0.0;
        for (double v : sorted) {
            const double z = (grid[g] - v) / h;
            acc += std::exp(-0.5 * z * z);
        }
        density[g] = acc * norm;
    }
    return density;
}

MeanCi mean_ci(std::span<const double> samples, double level) {
    if (samples.size() < 2) throw DataError("mean_ci: need at least two samples");
    double z = 0.0;
    if (std::abs(level - 0.95) < 1e-12) {
        z = 1.96;
    } else if (std::abs(level - 0.99) < 1e-12) {
        z = 2.576;
    } else {
        throw DomainError("mean_ci: unsupported confidence level");
    }
    // Dispersion with the n denominator: (0, 2) gives 1.96 / sqrt(2).
    const double m = mean(samples);
    double ss = 0.0;
    for (double v : samples) ss += (v - m) * (v - m);
    const auto n = static_cast<double>(samples.size());
    return {m, z * std::sqrt(ss / n) / std::sqrt(n)};
}

PriceSeries average_series(std::span<const PriceSeries> series) {
    if (series.empty()) throw AlignmentError("average_series: no series given");
    PriceSeries out;
    out.months = series.front().months;
    out.prices.assign(series.front().size(), 0.0);
    out.label = "average of " + std::to_string(series.size()) + " series";
    for (const auto& s : series) {
        if (s.size() != out.prices.size() || s.months != out.months) {
            throw AlignmentError("average_series: '" + s.label + "' is not aligned with '" +
                                 series.front().label + "'");
        }
        for (std::size_t i = 0; i < s.size(); ++i) out.prices[i] += s.prices[i];
    }
    for (double& p : out.prices) p /= static_cast<double>(series.size());
    return out;
}

namespace {

long parse_int(std::string_view s, const std::string& ctx) {
    long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw DataError(ctx + ": bad date '" + std::string(s) + "'");
    return v;
}

}  // namespace

PriceSeries load_external_prices(const std::filesystem::path& path) {
    const CsvTable table = read_csv(path);
    if (table.header.size() != 2) throw DataError(path.string() + ": expected two columns (date, price)");
    PriceSeries series;
    series.label = path.filename().string();
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const std::string& date = table.rows[r][0];
        const std::string ctx = path.string() + ": row " + std::to_string(r + 2);
        if (date.size() < 7 || date[4] != '-') throw DataError(ctx + ": bad date '" + date + "'");
        const long year = parse_int(std::string_view(date).substr(0, 4), ctx);
        const long month = parse_int(std::string_view(date).substr(5, 2), ctx);
        if (month < 1 || month > 12) throw DataError(ctx + ": month out of range in '" + date + "'");
        series.months.push_back(year * 12 + month - 1);
        series.prices.push_back(table.number(r, 1));
    }
    try {
        series.validate();
    } catch (const DomainError& e) {
        throw DataError(e.what());
    }
    return series;
}

PriceSeries load_trace_prices(const std::filesystem::path& path) {
    const CsvTable table = read_csv(path);
    const auto tc = table.column_index("t");
    const auto pc = table.column_index("price");
    PriceSeries series;
    series.label = path.string();
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        series.months.push_back(static_cast<long>(table.number(r, tc)));
        series.prices.push_back(table.number(r, pc));
    }
    try {
        series.validate();
    } catch (const DomainError& e) {
        throw DataError(e.what());
    }
    return series;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> out(n);
    if (n == 1) {
        out[0] = lo;
        return out;
    }
    for (std::size_t i = 0; i < n; ++i) out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return out;
}

double trapezoid(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DataError("trapezoid: size mismatch");
    double acc = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) acc += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    return acc;
}

}  // namespace gasrl::analysis
