#pragma once

#include <cmath>
#include <span>

#include <json.hpp>

namespace ragopt {

struct TTestResult {
    double t_statistic = 0.0;
    double degrees_of_freedom = 0.0;
    double p_two_tailed = 1.0;

    /// Zero pooled variance with unequal means yields p = 0 and t = +/-inf.
    bool infinite_t() const { return std::isinf(t_statistic); }
};

/// I_x(a, b), evaluated with Lentz's continued fraction; absolute error
/// well under 1e-6 over the parameter ranges used here.
double regularized_incomplete_beta(double a, double b, double x);

/// P(|T| > |t|) for Student's t with df degrees of freedom.
double student_t_two_tailed_p(double t, double df);

/// Two-sample t test. Default is the pooled-variance (equal variance)
/// Student form with df = |a| + |b| - 2; welch=true uses the
/// Welch-Satterthwaite form instead. Requires at least two values per side.
TTestResult unpaired_ttest(std::span<const double> a, std::span<const double> b,
                           bool welch = false);

void to_json(nlohmann::json& j, const TTestResult& r);

} // namespace ragopt
