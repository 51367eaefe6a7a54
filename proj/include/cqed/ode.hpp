#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "cqed/errors.hpp"

namespace cqed {

struct OdeOptions {
    double reltol = 1e-9;
    double abstol = 1e-12;
    double h_init = 0.0;  // 0 = pick automatically
    long max_steps = 2000000;
};

namespace detail {

// weighted RMS of err against scale abstol + reltol * max(|y0|, |y1|)
inline double error_norm(const Eigen::MatrixXcd& err, const Eigen::MatrixXcd& y0,
                         const Eigen::MatrixXcd& y1, double abstol, double reltol) {
    double acc = 0.0;
    const auto* pe = err.data();
    const auto* p0 = y0.data();
    const auto* p1 = y1.data();
    const long n = err.size();
    for (long i = 0; i < n; ++i) {
        double scale = abstol + reltol * std::max(std::abs(p0[i]), std::abs(p1[i]));
        double q = std::abs(pe[i]) / scale;
        acc += q * q;
    }
    if (!std::isfinite(acc)) return std::numeric_limits<double>::infinity();
    return std::sqrt(acc / double(n));
}

}  // namespace detail

// Dormand-Prince 5(4) with embedded error estimate and FSAL, for autonomous
// matrix-valued ODEs.  on_accept(t, y) fires after every accepted step.
template <class Rhs, class OnAccept>
Eigen::MatrixXcd integrate_dopri5(Rhs&& rhs, Eigen::MatrixXcd y, double t_begin, double t_end,
                                  const OdeOptions& opt, OnAccept&& on_accept) {
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    // b - b_hat, for the embedded 4th-order error estimate
    static constexpr double e1 = b1 - 5179.0 / 57600, e3 = b3 - 7571.0 / 16695,
                            e4 = b4 - 393.0 / 640, e5 = b5 + 92097.0 / 339200,
                            e6 = b6 - 187.0 / 2100, e7 = -1.0 / 40;

    const double span = t_end - t_begin;
    if (span <= 0.0) return y;

    double t = t_begin;
    Eigen::MatrixXcd k1 = rhs(y);

    const double h_floor = std::max(span * 1e-14, 1e-300);

    double h = opt.h_init;
    if (h <= 0.0) {
        // ratio of solution scale to derivative scale, in the error-weighted norm
        double d0 = detail::error_norm(y, y, y, opt.abstol, opt.reltol);
        double d1 = detail::error_norm(k1, y, y, opt.abstol, opt.reltol);
        h = (d0 > 0.0 && d1 > 0.0 && std::isfinite(d0) && std::isfinite(d1))
                ? 0.01 * d0 / d1
                : span * 1e-6;
        h = std::max(h, 10.0 * h_floor);
    }
    h = std::min(h, span);
    Eigen::MatrixXcd k2, k3, k4, k5, k6, k7, y_new, err;

    for (long step = 0; step < opt.max_steps; ++step) {
        if (t >= t_end) return y;
        h = std::min(h, t_end - t);
        if (h < h_floor)
            throw StepSizeUnderflow("integrate_dopri5: step size " + std::to_string(h) +
                                    " fell below floor at t = " + std::to_string(t));

        k2 = rhs(y + h * (a21 * k1));
        k3 = rhs(y + h * (a31 * k1 + a32 * k2));
        k4 = rhs(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
        k5 = rhs(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        k6 = rhs(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        k7 = rhs(y_new);  // FSAL
        err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        double en = detail::error_norm(err, y, y_new, opt.abstol, opt.reltol);
        if (en <= 1.0) {
            t += h;
            y.swap(y_new);
            k1.swap(k7);
            on_accept(t, y);
        }
        double factor = (en > 0.0) ? 0.9 * std::pow(en, -0.2) : 5.0;
        h *= std::clamp(factor, 0.2, 5.0);
    }
    throw NoConvergence("integrate_dopri5: exceeded step budget of " +
                        std::to_string(opt.max_steps));
}

template <class Rhs>
Eigen::MatrixXcd integrate_dopri5(Rhs&& rhs, Eigen::MatrixXcd y, double t_begin, double t_end,
                                  const OdeOptions& opt) {
    return integrate_dopri5(std::forward<Rhs>(rhs), std::move(y), t_begin, t_end, opt,
                            [](double, const Eigen::MatrixXcd&) {});
}

}  // namespace cqed
