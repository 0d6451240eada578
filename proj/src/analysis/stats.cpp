#include "reflectcast/analysis/stats.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "reflectcast/errors.hpp"

namespace reflectcast::analysis {

double GroupSummary::sd_population() const {
    return n ? sd * std::sqrt(static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
}

GroupSummary from_population_sd(std::size_t n, double mean, double sd_population) {
    if (n < 2) throw PreconditionError("a group needs at least two values");
    return {n, mean, sd_population * std::sqrt(static_cast<double>(n) / static_cast<double>(n - 1))};
}

GroupSummary summarize(std::span<const double> values) {
    if (values.size() < 2) throw PreconditionError("a group needs at least two values");
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {values.size(), mean, std::sqrt(ss / (n - 1))};
}

namespace {

void check_group(const GroupSummary& g, const char* name) {
    if (g.n < 2) throw PreconditionError(std::string("group ") + name + " needs n >= 2");
    if (!(g.sd >= 0)) throw PreconditionError(std::string("group ") + name + " has a negative sd");
}

double pooled_sd(const GroupSummary& a, const GroupSummary& b) {
    const double na = static_cast<double>(a.n), nb = static_cast<double>(b.n);
    return std::sqrt(((na - 1) * a.sd * a.sd + (nb - 1) * b.sd * b.sd) / (na + nb - 2));
}

}  // namespace

TestResult pooled_t_test(const GroupSummary& a, const GroupSummary& b) {
    check_group(a, "a");
    check_group(b, "b");
    TestResult r;
    r.df = static_cast<int>(a.n + b.n - 2);
    const double sp = pooled_sd(a, b);
    const double diff = a.mean - b.mean;
    if (sp == 0) {
        if (diff == 0) return r;  // t = 0, p = 1, d = 0
        r.infinite_t = true;
        r.t = std::copysign(std::numeric_limits<double>::infinity(), diff);
        r.p_two_tailed = 0;
        r.cohens_d = std::numeric_limits<double>::infinity();
        return r;
    }
    const double se = sp * std::sqrt(1.0 / static_cast<double>(a.n) + 1.0 / static_cast<double>(b.n));
    r.t = diff / se;
    const boost::math::students_t dist(r.df);
    r.p_two_tailed = std::min(1.0, 2 * boost::math::cdf(boost::math::complement(dist, std::fabs(r.t))));
    r.cohens_d = std::fabs(diff) / sp;
    return r;
}

TestResult pooled_t_test(std::span<const double> a, std::span<const double> b) {
    return pooled_t_test(summarize(a), summarize(b));
}

double cohens_d(const GroupSummary& a, const GroupSummary& b) {
    check_group(a, "a");
    check_group(b, "b");
    const double diff = std::fabs(a.mean - b.mean);
    if (diff == 0) return 0;
    const double sp = pooled_sd(a, b);
    if (sp == 0) throw DegenerateVariance("both groups have zero variance and different means");
    return diff / sp;
}

NormalityResult dagostino_pearson(std::span<const double> x) {
    if (x.size() < kMinNormalitySample) {
        throw SampleTooSmall("normality test needs at least " + std::to_string(kMinNormalitySample) + " values, got " +
                             std::to_string(x.size()));
    }
    const double n = static_cast<double>(x.size());
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double m2 = 0, m3 = 0, m4 = 0;
    for (double v : x) {
        const double d = v - mean, d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if (m2 == 0) throw DegenerateVariance("normality test on a constant sample");
    const double g1 = m3 / std::pow(m2, 1.5);  // biased skewness
    const double b2 = m4 / (m2 * m2);          // biased (Pearson) kurtosis

    // Skewness z (D'Agostino 1970).
    const double y = g1 * std::sqrt((n + 1) * (n + 3) / (6.0 * (n - 2)));
    const double beta2 = 3.0 * (n * n + 27 * n - 70) * (n + 1) * (n + 3) / ((n - 2) * (n + 5) * (n + 7) * (n + 9));
    const double w2 = -1 + std::sqrt(2 * (beta2 - 1));
    const double delta = 1 / std::sqrt(0.5 * std::log(w2));
    const double alpha = std::sqrt(2.0 / (w2 - 1));
    const double zs = delta * std::asinh(y / alpha);

    // Kurtosis z (Anscombe & Glynn 1983).
    const double e = 3.0 * (n - 1) / (n + 1);
    const double var_b2 = 24.0 * n * (n - 2) * (n - 3) / ((n + 1) * (n + 1) * (n + 3) * (n + 5));
    const double xk = (b2 - e) / std::sqrt(var_b2);
    const double sqrt_beta1 =
        6.0 * (n * n - 5 * n + 2) / ((n + 7) * (n + 9)) * std::sqrt(6.0 * (n + 3) * (n + 5) / (n * (n - 2) * (n - 3)));
    const double a = 6.0 + 8.0 / sqrt_beta1 * (2.0 / sqrt_beta1 + std::sqrt(1 + 4.0 / (sqrt_beta1 * sqrt_beta1)));
    const double term1 = 1 - 2 / (9.0 * a);
    const double denom = 1 + xk * std::sqrt(2 / (a - 4.0));
    if (denom == 0) throw DegenerateVariance("kurtosis transform is undefined for this sample");
    const double term2 = std::copysign(std::cbrt((1 - 2.0 / a) / std::fabs(denom)), denom);
    const double zk = (term1 - term2) / std::sqrt(2 / (9.0 * a));

    NormalityResult r;
    r.n = x.size();
    r.skewness_z = zs;
    r.kurtosis_z = zk;
    r.k2 = zs * zs + zk * zk;
    r.p = boost::math::cdf(boost::math::complement(boost::math::chi_squared(2), r.k2));
    return r;
}

nlohmann::json to_json(const GroupSummary& s) {
    return {{"n", s.n}, {"mean", s.mean}, {"sd", s.sd}, {"sd_population", s.sd_population()}};
}

nlohmann::json to_json(const TestResult& r) {
    nlohmann::json j{{"df", r.df}, {"p_two_tailed", r.p_two_tailed}, {"infinite_t", r.infinite_t}};
    // JSON has no infinity; an infinite t is carried by the flag.
    j["t"] = r.infinite_t ? nlohmann::json() : nlohmann::json(r.t);
    j["cohens_d"] = std::isfinite(r.cohens_d) ? nlohmann::json(r.cohens_d) : nlohmann::json();
    return j;
}

nlohmann::json to_json(const NormalityResult& r) {
    return {{"n", r.n}, {"skewness_z", r.skewness_z}, {"kurtosis_z", r.kurtosis_z}, {"k2", r.k2}, {"p", r.p}};
}

}  // namespace reflectcast::analysis
