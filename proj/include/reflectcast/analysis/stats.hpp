#pragma once

#include <cstddef>
#include <span>

#include <json.hpp>

namespace reflectcast::analysis {

struct GroupSummary {
    std::size_t n = 0;
    double mean = 0;
    double sd = 0;  // sample standard deviation (n - 1)

    // The same spread with an n denominator.
    double sd_population() const;
};

// Converts a summary whose sd used an n denominator.
GroupSummary from_population_sd(std::size_t n, double mean, double sd_population);

// Throws PreconditionError when fewer than two values.
GroupSummary summarize(std::span<const double> values);

struct TestResult {
    double t = 0;
    int df = 0;
    double p_two_tailed = 1;
    double cohens_d = 0;
    // Both groups have zero variance and different means: t is +-infinity, p = 0.
    bool infinite_t = false;
};

// Student's two-sample t with pooled variance, df = n_a + n_b - 2, two-tailed p.
// Positive t means a's mean is larger. Both standard deviations zero: equal
// means give t = 0, p = 1; different means set infinite_t.
// Throws PreconditionError when either n < 2 or an sd is negative.
TestResult pooled_t_test(const GroupSummary& a, const GroupSummary& b);
TestResult pooled_t_test(std::span<const double> a, std::span<const double> b);

// |mean_a - mean_b| / pooled sd. Equal means give 0. Throws DegenerateVariance
// when the pooled sd is zero and the means differ.
double cohens_d(const GroupSummary& a, const GroupSummary& b);

struct NormalityResult {
    std::size_t n = 0;
    double skewness_z = 0;
    double kurtosis_z = 0;
    double k2 = 0;
    double p = 1;  // chi-squared, 2 df
};

// D'Agostino-Pearson omnibus test on biased skewness and kurtosis.
// Throws SampleTooSmall below 20 values, DegenerateVariance for constant samples.
NormalityResult dagostino_pearson(std::span<const double> sample);
inline constexpr std::size_t kMinNormalitySample = 20;

nlohmann::json to_json(const GroupSummary& s);
nlohmann::json to_json(const TestResult& r);
nlohmann::json to_json(const NormalityResult& r);

}  // namespace reflectcast::analysis
