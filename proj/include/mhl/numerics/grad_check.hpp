#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "mhl/error.hpp"
#include "mhl/numerics/matrix.hpp"
#include "mhl/numerics/tape.hpp"

namespace mhl {

/// Scalar-valued composite built on a fresh tape from the input variable.
using ScalarFunction = std::function<Var<double>(Tape<double>&, const Var<double>&)>;

/// Max over entries of |analytic - central difference| / max(1, |analytic|).
/// Non-finite intermediates surface as the NumericError of the failing op.
inline double grad_check(const ScalarFunction& f, const Matrix<double>& x, double h = 1e-5) {
    Matrix<double> analytic;
    {
        Tape<double> tape;
        const auto xv = tape.variable(x);
        const auto out = f(tape, xv);
        if (out.value().size() != 1) throw DimensionError("grad_check: function must return 1x1, got " + out.value().shape());
        tape.backward(out);
        analytic = xv.grad();
    }
    auto eval = [&](const Matrix<double>& at) {
        Tape<double> tape;
        return f(tape, tape.constant(at)).scalar();
    };
    double worst = 0.0;
    Matrix<double> probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = probe[i];
        probe[i] = orig + h;
        const double up = eval(probe);
        probe[i] = orig - h;
        const double down = eval(probe);
        probe[i] = orig;
        const double numeric = (up - down) / (2.0 * h);
        if (!std::isfinite(numeric)) throw NumericError("grad_check: non-finite finite difference at entry " + std::to_string(i));
        const double err = std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i]));
        worst = std::max(worst, err);
    }
    return worst;
}

}  // namespace mhl
