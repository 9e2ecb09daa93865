#pragma once

// Globally adaptive Gauss-Kronrod (7/15) integration on finite intervals.
// Error estimation follows QUADPACK's QK15 heuristics; the worst panel is
// bisected until the summed estimate meets max(abs_tol, rel_tol * |I|).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <span>
#include <vector>

namespace crossnorm {

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    std::size_t panels = 0;
    std::size_t evaluations = 0;
    bool converged = false;
};

namespace detail {

struct Panel {
    double a;
    double b;
    double value;
    double error;
    bool operator<(const Panel& other) const { return error < other.error; }
};

template <class F>
Panel gauss_kronrod_15(const F& f, double a, double b) {
    static constexpr double xgk[8] = {
        0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
        0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
        0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
        0.207784955007898467600689403773245, 0.0};
    static constexpr double wgk[8] = {
        0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
        0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
        0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
        0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
    static constexpr double wg[4] = {
        0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
        0.381830050505118944950369775488975, 0.417959183673469387755102040816327};
    constexpr double eps = std::numeric_limits<double>::epsilon();

    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double res_g = fc * wg[3];
    double res_k = fc * wgk[7];
    double res_abs = std::fabs(res_k);
    double fv1[7];
    double fv2[7];
    for (int j = 0; j < 7; ++j) {
        const double dx = half * xgk[j];
        fv1[j] = f(center - dx);
        fv2[j] = f(center + dx);
        const double sum = fv1[j] + fv2[j];
        res_k += wgk[j] * sum;
        res_abs += wgk[j] * (std::fabs(fv1[j]) + std::fabs(fv2[j]));
        if (j % 2 == 1) res_g += wg[j / 2] * sum;
    }
    const double mean = 0.5 * res_k;
    double res_asc = wgk[7] * std::fabs(fc - mean);
    for (int j = 0; j < 7; ++j) {
        res_asc += wgk[j] * (std::fabs(fv1[j] - mean) + std::fabs(fv2[j] - mean));
    }
    const double scale = std::fabs(half);
    res_abs *= scale;
    res_asc *= scale;
    double err = std::fabs((res_k - res_g) * half);
    if (res_asc != 0.0 && err != 0.0) {
        err = res_asc * std::min(1.0, std::pow(200.0 * err / res_asc, 1.5));
    }
    if (res_abs > std::numeric_limits<double>::min() / (50.0 * eps)) {
        err = std::max(50.0 * eps * res_abs, err);
    }
    return {a, b, res_k * half, err};
}

}  // namespace detail

/// Integrates f over [a, b], optionally pre-split at interior breakpoints.
template <class F>
QuadratureResult integrate(const F& f, double a, double b, double abs_tol, double rel_tol,
                           std::span<const double> breakpoints = {},
                           std::size_t max_panels = 4000) {
    QuadratureResult out;
    if (a == b) {
        out.converged = true;
        return out;
    }
    std::vector<double> cuts{a};
    for (double x : breakpoints) {
        if (x > a && x < b) cuts.push_back(x);
    }
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    std::priority_queue<detail::Panel> heap;
    double total = 0.0;
    double total_err = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        detail::Panel p = detail::gauss_kronrod_15(f, cuts[i], cuts[i + 1]);
        total += p.value;
        total_err += p.error;
        heap.push(p);
    }
    out.evaluations = 15 * heap.size();

    while (total_err > std::max(abs_tol, rel_tol * std::fabs(total)) && heap.size() < max_panels) {
        const detail::Panel worst = heap.top();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) break;  // panel at machine resolution
        heap.pop();
        const detail::Panel left = detail::gauss_kronrod_15(f, worst.a, mid);
        const detail::Panel right = detail::gauss_kronrod_15(f, mid, worst.b);
        out.evaluations += 30;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    // Re-sum from the panels to shed the drift of the running updates.
    total = 0.0;
    total_err = 0.0;
    out.panels = heap.size();
    std::vector<detail::Panel> panels;
    panels.reserve(heap.size());
    while (!heap.empty()) {
        panels.push_back(heap.top());
        heap.pop();
    }
    std::sort(panels.begin(), panels.end(),
              [](const detail::Panel& l, const detail::Panel& r) { return l.a < r.a; });
    for (const auto& p : panels) {
        total += p.value;
        total_err += p.error;
    }
    out.value = total;
    out.error = total_err;
    out.converged = total_err <= std::max(abs_tol, rel_tol * std::fabs(total));
    return out;
}

}  // namespace crossnorm
