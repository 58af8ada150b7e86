#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace vpstab::detail {

/// 21-point Gauss-Kronrod rule on [a, b] with the QUADPACK error heuristic,
/// which is far less pessimistic than |K - G| for smooth integrands.
template <class F>
double gk21(F& f, double a, double b, double* error) {
    using Kr = boost::math::quadrature::gauss_kronrod<double, 21>;
    using Ga = boost::math::quadrature::gauss<double, 10>;
    const auto& x = Kr::abscissa();
    const auto& wk = Kr::weights();
    const auto& wg = Ga::weights();
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    // Kronrod nodes: x[0] = 0, odd indices are the Gauss nodes of G10.
    double fv[21];
    fv[0] = f(mid);
    for (std::size_t i = 1; i < x.size(); ++i) {
        fv[2 * i - 1] = f(mid - half * x[i]);
        fv[2 * i] = f(mid + half * x[i]);
    }
    double kr = wk[0] * fv[0], ga = 0.0, abs_sum = std::abs(wk[0] * fv[0]);
    for (std::size_t i = 1; i < x.size(); ++i) {
        const double pair = fv[2 * i - 1] + fv[2 * i];
        kr += wk[i] * pair;
        abs_sum += wk[i] * (std::abs(fv[2 * i - 1]) + std::abs(fv[2 * i]));
        if (i % 2 == 1) ga += wg[i / 2] * pair;
    }
    const double mean = 0.5 * kr;
    double asc = wk[0] * std::abs(fv[0] - mean);
    for (std::size_t i = 1; i < x.size(); ++i)
        asc += wk[i] * (std::abs(fv[2 * i - 1] - mean) + std::abs(fv[2 * i] - mean));
    kr *= half;
    ga *= half;
    abs_sum *= std::abs(half);
    asc *= std::abs(half);
    double err = std::abs(kr - ga);
    if (asc != 0.0 && err != 0.0) err = asc * std::min(1.0, std::pow(200.0 * err / asc, 1.5));
    constexpr double eps = std::numeric_limits<double>::epsilon();
    if (abs_sum > std::numeric_limits<double>::min() / (50.0 * eps)) err = std::max(50.0 * eps * abs_sum, err);
    *error = err;
    return kr;
}

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    int intervals = 0;
};

/// Globally adaptive Gauss-Kronrod (21 points) over the pieces delimited by
/// sorted `breaks`: repeatedly bisects the piece with the largest error
/// estimate until the summed estimate is below max(abs_tol, rel_tol |I|) or
/// the number of pieces reaches `max_intervals` (on top of the initial ones).
/// `on_piece(a, b, value)` receives every final piece, in no fixed order.
template <class F, class Sink>
QuadResult adaptive_gk(F&& f, const std::vector<double>& breaks, double rel_tol, double abs_tol, int max_intervals,
                       Sink&& on_piece) {
    struct Piece {
        double a, b, value, error;
        bool operator<(const Piece& o) const { return error < o.error; }
    };
    const auto eval = [&](double lo, double hi) {
        double err = 0.0;
        const double v = gk21(f, lo, hi, &err);
        return Piece{lo, hi, v, err};
    };
    std::priority_queue<Piece> heap;
    double total = 0.0, error = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        if (!(breaks[i + 1] > breaks[i])) continue;
        const Piece p = eval(breaks[i], breaks[i + 1]);
        total += p.value;
        error += p.error;
        heap.push(p);
    }
    QuadResult out;
    if (heap.empty()) return out;
    int count = 0;
    while (error > std::max(abs_tol, rel_tol * std::abs(total)) && count < max_intervals) {
        const Piece worst = heap.top();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) break;
        heap.pop();
        const Piece l = eval(worst.a, mid), r = eval(mid, worst.b);
        total += l.value + r.value - worst.value;
        error += l.error + r.error - worst.error;
        heap.push(l);
        heap.push(r);
        ++count;
    }
    // Re-sum to shed the drift of the running updates.
    total = 0.0;
    error = 0.0;
    out.intervals = static_cast<int>(heap.size());
    while (!heap.empty()) {
        const Piece& p = heap.top();
        total += p.value;
        error += p.error;
        on_piece(p.a, p.b, p.value);
        heap.pop();
    }
    out.value = total;
    out.error = error;
    return out;
}

template <class F>
QuadResult adaptive_gk(F&& f, double a, double b, double rel_tol, double abs_tol = 0.0, int max_intervals = 400) {
    return adaptive_gk(f, std::vector<double>{a, b}, rel_tol, abs_tol, max_intervals, [](double, double, double) {});
}

}  // namespace vpstab::detail
