#include "ragopt/ttest.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "ragopt/errors.hpp"

namespace ragopt {

namespace {

// Continued fraction for the incomplete beta function (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIterations = 400;
    constexpr double kEpsilon = 3e-15;
    constexpr double kTiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;

    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;

    for (int m = 1; m <= kMaxIterations; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;

        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEpsilon) {
            break;
        }
    }
    return h;
}

struct SampleMoments {
    double mean = 0.0;
    double variance = 0.0; // sample variance, ddof = 1
    double n = 0.0;
};

SampleMoments moments(std::span<const double> values) {
    SampleMoments m;
    m.n = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values) {
        sum += v;
    }
    m.mean = sum / m.n;
    double ss = 0.0;
    for (double v : values) {
        const double d = v - m.mean;
        ss += d * d;
    }
    m.variance = ss / (m.n - 1.0);
    return m;
}

} // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) {
        throw std::invalid_argument("regularized_incomplete_beta requires a, b > 0");
    }
    if (x <= 0.0) {
        return 0.0;
    }
    if (x >= 1.0) {
        return 1.0;
    }
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return std::exp(ln_front) * beta_continued_fraction(a, b, x) / a;
    }
    return 1.0 - std::exp(ln_front) * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_tailed_p(double t, double df) {
    if (df <= 0.0) {
        throw std::invalid_argument("degrees of freedom must be positive");
    }
    if (t == 0.0) {
        return 1.0;
    }
    if (std::isinf(t)) {
        return 0.0;
    }
    const double x = df / (df + t * t);
    return regularized_incomplete_beta(df / 2.0, 0.5, x);
}

TTestResult unpaired_ttest(std::span<const double> a, std::span<const double> b, bool welch) {
    if (a.size() < 2 || b.size() < 2) {
        throw DataError("unpaired t-test requires at least two values per sample");
    }
    const SampleMoments ma = moments(a);
    const SampleMoments mb = moments(b);

    TTestResult result;
    double se = 0.0;
    if (welch) {
        const double va = ma.variance / ma.n;
        const double vb = mb.variance / mb.n;
        se = std::sqrt(va + vb);
        if (se > 0.0) {
            result.degrees_of_freedom =
                (va + vb) * (va + vb) /
                (va * va / (ma.n - 1.0) + vb * vb / (mb.n - 1.0));
        } else {
            result.degrees_of_freedom = ma.n + mb.n - 2.0;
        }
    } else {
        result.degrees_of_freedom = ma.n + mb.n - 2.0;
        const double pooled = ((ma.n - 1.0) * ma.variance + (mb.n - 1.0) * mb.variance) /
                              result.degrees_of_freedom;
        se = std::sqrt(pooled * (1.0 / ma.n + 1.0 / mb.n));
    }

    const double diff = ma.mean - mb.mean;
    if (se == 0.0) {
        if (diff == 0.0) {
            result.t_statistic = 0.0;
            result.p_two_tailed = 1.0;
        } else {
            result.t_statistic = diff > 0.0 ? std::numeric_limits<double>::infinity()
                                            : -std::numeric_limits<double>::infinity();
            result.p_two_tailed = 0.0;
        }
        return result;
    }

    result.t_statistic = diff / se;
    result.p_two_tailed = student_t_two_tailed_p(result.t_statistic, result.degrees_of_freedom);
    return result;
}

void to_json(nlohmann::json& j, const TTestResult& r) {
    j = nlohmann::json{{"degrees_of_freedom", r.degrees_of_freedom},
                       {"p_two_tailed", r.p_two_tailed}};
    if (r.infinite_t()) {
        j["t_statistic"] = r.t_statistic > 0 ? "inf" : "-inf";
        j["infinite_t"] = true;
    } else {
        j["t_statistic"] = r.t_statistic;
    }
}

} // namespace ragopt
