#pragma once

namespace spt {

// Regularised upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a), a > 0, x >= 0.
double gamma_q(double a, double x);
// log Q(a, x); stays finite where Q underflows.
double log_gamma_q(double a, double x);

}  // namespace spt
