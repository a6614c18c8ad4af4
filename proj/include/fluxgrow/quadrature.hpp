#pragma once

// Globally adaptive Gauss-Kronrod (7/15) integration on finite, semi-infinite
// and doubly infinite intervals. Infinite ranges are folded onto [0, 1) with
// x = t / (1 - t) so that Gaussian-damped integrands become smooth and bounded.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fluxgrow
{
    struct QuadratureConfig
    {
        double rel_tol = 1e-10;
        double abs_tol = 1e-15;
        long max_evaluations = 1'000'000;
        /// Interior split points (in the original variable) where the
        /// integrand has structure, e.g. the cutoff scale of a profile.
        std::vector<double> breakpoints{};
    };

    struct QuadratureResult
    {
        double value = 0.0;
        double error = 0.0;
        long evaluations = 0;
        bool converged = false;
    };

    class QuadratureError : public std::runtime_error
    {
    public:
        QuadratureError(const std::string& what, QuadratureResult partial)
            : std::runtime_error(what), m_partial(partial)
        {
        }

        const QuadratureResult& partial() const noexcept { return m_partial; }

    private:
        QuadratureResult m_partial;
    };

    namespace detail
    {
        // Kronrod abscissae (positive half, descending) and weights, Gauss weights on the odd nodes.
        inline constexpr std::array<double, 8> kronrod_x = {
            0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
            0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
            0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
            0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
        inline constexpr std::array<double, 8> kronrod_w = {
            0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
            0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
            0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
            0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
        inline constexpr std::array<double, 4> gauss_w = {
            0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
            0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

        struct Panel
        {
            double lo, hi, value, error, abs_value;
            bool operator<(const Panel& o) const { return error < o.error; }
        };

        template <typename F>
        Panel gk15(const F& f, double lo, double hi)
        {
            const double center = 0.5 * (lo + hi);
            const double half = 0.5 * (hi - lo);
            std::array<double, 7> lower{}, upper{};
            const double fc = f(center);
            double kronrod = fc * kronrod_w[7];
            double gauss = fc * gauss_w[3];
            double abs_sum = std::abs(fc) * kronrod_w[7];
            for (int j = 0; j < 7; ++j)
            {
                const double dx = half * kronrod_x[j];
                lower[j] = f(center - dx);
                upper[j] = f(center + dx);
                kronrod += kronrod_w[j] * (lower[j] + upper[j]);
                abs_sum += kronrod_w[j] * (std::abs(lower[j]) + std::abs(upper[j]));
                if (j % 2 == 1)
                    gauss += gauss_w[j / 2] * (lower[j] + upper[j]);
            }
            const double mean = 0.5 * kronrod;
            double asc = kronrod_w[7] * std::abs(fc - mean);
            for (int j = 0; j < 7; ++j)
                asc += kronrod_w[j] * (std::abs(lower[j] - mean) + std::abs(upper[j] - mean));
            asc *= std::abs(half);

            const double value = kronrod * half;
            const double abs_value = abs_sum * std::abs(half);
            double err = std::abs((kronrod - gauss) * half);
            // QUADPACK-style sharpening of the raw Gauss/Kronrod difference.
            if (asc > 0.0 && err > 0.0)
                err = asc * std::min(1.0, std::pow(200.0 * err / asc, 1.5));
            err = std::max(err, 50.0 * std::numeric_limits<double>::epsilon() * abs_value);
            return {lo, hi, value, err, abs_value};
        }

        template <typename F>
        QuadratureResult adaptive(const F& f, const std::vector<double>& cuts, const QuadratureConfig& cfg)
        {
            std::priority_queue<Panel> heap;
            QuadratureResult out;
            double total = 0.0, total_err = 0.0, total_abs = 0.0;
            for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
            {
                if (!(cuts[i + 1] > cuts[i]))
                    continue;
                Panel p = gk15(f, cuts[i], cuts[i + 1]);
                out.evaluations += 15;
                total += p.value;
                total_err += p.error;
                total_abs += p.abs_value;
                heap.push(p);
            }

            const double roundoff = 50.0 * std::numeric_limits<double>::epsilon();
            while (!heap.empty())
            {
                const double target = std::max(cfg.abs_tol, cfg.rel_tol * std::abs(total));
                if (total_err <= target || total_err <= roundoff * total_abs)
                {
                    out.converged = true;
                    break;
                }
                if (out.evaluations + 30 > cfg.max_evaluations)
                    break;

                Panel worst = heap.top();
                const double mid = 0.5 * (worst.lo + worst.hi);
                if (!(mid > worst.lo && mid < worst.hi))
                {
                    // Panel no longer splittable in double precision: accept it as is.
                    out.converged = total_err - worst.error <= target;
                    break;
                }
                heap.pop();
                Panel left = gk15(f, worst.lo, mid);
                Panel right = gk15(f, mid, worst.hi);
                out.evaluations += 30;
                total += left.value + right.value - worst.value;
                total_err += left.error + right.error - worst.error;
                total_abs += left.abs_value + right.abs_value - worst.abs_value;
                heap.push(left);
                heap.push(right);
            }

            // Re-sum to shed the drift accumulated by incremental updates.
            double value = 0.0, err = 0.0;
            while (!heap.empty())
            {
                value += heap.top().value;
                err += heap.top().error;
                heap.pop();
            }
            out.value = value;
            out.error = err;
            return out;
        }
    } // namespace detail

    /// Integrates f over [lo, hi].
    template <typename F>
    QuadratureResult integrate_interval(const F& f, double lo, double hi, const QuadratureConfig& cfg = {})
    {
        std::vector<double> cuts{lo};
        for (double b : cfg.breakpoints)
            if (b > lo && b < hi)
                cuts.push_back(b);
        cuts.push_back(hi);
        std::sort(cuts.begin(), cuts.end());
        return detail::adaptive(f, cuts, cfg);
    }

    /// Integrates f over [lo, inf). Breakpoints are honoured in the mapped variable.
    template <typename F>
    QuadratureResult integrate_to_infinity(const F& f, double lo, const QuadratureConfig& cfg = {})
    {
        auto mapped = [&f, lo](double t) {
            if (t >= 1.0)
                return 0.0;
            const double s = 1.0 - t;
            const double x = lo + t / s;
            const double v = f(x);
            return v == 0.0 ? 0.0 : v / (s * s);
        };
        std::vector<double> cuts{0.0};
        for (double b : cfg.breakpoints)
            if (b > lo)
                cuts.push_back((b - lo) / (1.0 + (b - lo)));
        cuts.push_back(1.0);
        std::sort(cuts.begin(), cuts.end());
        return detail::adaptive(mapped, cuts, cfg);
    }

    /// Integrates f over the whole real line (split at `center`).
    template <typename F>
    QuadratureResult integrate_real_line(const F& f, double center, const QuadratureConfig& cfg = {})
    {
        QuadratureConfig right_cfg = cfg, left_cfg = cfg;
        right_cfg.breakpoints.clear();
        left_cfg.breakpoints.clear();
        for (double b : cfg.breakpoints)
        {
            if (b > center)
                right_cfg.breakpoints.push_back(b);
            else if (b < center)
                left_cfg.breakpoints.push_back(2.0 * center - b);
        }
        right_cfg.max_evaluations = left_cfg.max_evaluations = cfg.max_evaluations / 2;
        auto right = integrate_to_infinity(f, center, right_cfg);
        auto left = integrate_to_infinity([&f, center](double x) { return f(2.0 * center - x); }, center, left_cfg);
        QuadratureResult out;
        out.value = left.value + right.value;
        out.error = left.error + right.error;
        out.evaluations = left.evaluations + right.evaluations;
        out.converged = left.converged && right.converged;
        return out;
    }

    /// Radial integral over x in [0, inf) for integrands with at least Gaussian decay.
    template <typename F>
    QuadratureResult radial_quadrature(const F& integrand, const QuadratureConfig& cfg = {})
    {
        return integrate_to_infinity(integrand, 0.0, cfg);
    }

    inline double require_converged(const QuadratureResult& r, const std::string& context)
    {
        if (!r.converged)
        {
            std::ostringstream msg;
            msg << context << ": quadrature did not reach tolerance after " << r.evaluations
                << " evaluations (value " << r.value << ", error estimate " << r.error << ")";
            throw QuadratureError(msg.str(), r);
        }
        return r.value;
    }
} // namespace fluxgrow
