#pragma once

#include <filesystem>
#include <span>
#include <vector>

namespace gasrl {

/// Truncated Fourier series for the seasonal log-demand component,
///   S_t = sum_k [a_k cos(k phi_t) + b_k sin(k phi_t)],  phi_t = 2 pi t / 12.
/// Every harmonic must divide 12 so that S has yearly period.
struct SeasonalCoefficients {
    struct Term {
        int harmonic = 1;
        double a = 0.0;
        double b = 0.0;
        bool operator==(const Term&) const = default;
    };
    std::vector<Term> terms;

    bool operator==(const SeasonalCoefficients&) const = default;

    /// Throws ConfigError if a harmonic is not a positive divisor of 12 or repeats.
    void validate() const;
    std::vector<int> harmonics() const;
};

/// Month phase 2 pi t / 12, reduced to [0, 2 pi) so that S_{t+12} == S_t bit for bit.
double month_phase(long t);

double seasonal_value(const SeasonalCoefficients& coeffs, long t);

struct MonthlyObservation {
    long t = 0;
    double value = 0.0;
};

/// Ordinary least squares fit of the Fourier coefficients.
///
/// Solved through the normal equations with a column-pivoted QR. Regressors that
/// vanish on every integer month (sin(pi t) for k = 6) carry no information; their
/// coefficient is reported as 0. Any other rank deficiency raises FitError.
SeasonalCoefficients fit_coefficients(std::span<const MonthlyObservation> series,
                                      std::span<const int> harmonics);

/// The Fourier terms used by the simulator when no coefficient file is configured.
/// They are the fit of data/reference_monthly_consumption.csv (log levels) with K = {1,2,3,4,6}.
SeasonalCoefficients default_seasonal_coefficients();

/// Reference winter-peaking monthly log-demand profile (January first), zero mean.
std::vector<double> reference_log_demand_profile();

/// CSV with header `harmonic,a,b`.
SeasonalCoefficients load_seasonal_coefficients(const std::filesystem::path& path);
void save_seasonal_coefficients(const SeasonalCoefficients& coeffs, const std::filesystem::path& path);

}  // namespace gasrl
