#pragma once

// Laguerre-Gauss cavity modes of the twisted resonator.
//
// f_{n,l}(r, phi) = C_{n,l} x^|l| e^{i l phi} e^{-x^2} L_n^|l|(2 x^2),  x = r / w0,
// C_{n,l} = sqrt(2^{|l|+1} n! / (pi (|l|+n)!)) / w0.

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>

#include "numeric.hpp"
#include "quadrature.hpp"

namespace fluxgrow
{
    struct ModeIndex
    {
        int n = 0; ///< radial quantum number
        int l = 0; ///< orbital angular momentum in units of hbar

        ModeIndex() = default;
        ModeIndex(int radial, int angular) : n(radial), l(angular)
        {
            if (n < 0 || l < 0)
                throw std::invalid_argument("ModeIndex: n and l must be nonnegative (got n=" +
                                            std::to_string(n) + ", l=" + std::to_string(l) + ")");
        }

        /// Landau manifold label alpha = l mod 3 (0 for the lowest Landau level).
        int manifold() const { return l % 3; }
        bool in_lowest_landau_level() const { return n == 0 && l % 3 == 0; }

        auto operator<=>(const ModeIndex&) const = default;
    };

    class CavityGeometry
    {
    public:
        explicit CavityGeometry(double waist) : m_w0(waist)
        {
            if (!(waist > 0.0))
                throw std::invalid_argument("CavityGeometry: waist must be positive");
        }

        double waist() const { return m_w0; }

        /// Degenerate ladders l = 3m + alpha share one frequency per (n, alpha).
        void set_frequency(int n, int alpha, double delta) { m_freqs[{n, alpha}] = delta; }

        double frequency(const ModeIndex& mode) const
        {
            auto it = m_freqs.find({mode.n, mode.manifold()});
            if (it == m_freqs.end())
                throw std::out_of_range("CavityGeometry: no frequency for (n=" + std::to_string(mode.n) +
                                        ", alpha=" + std::to_string(mode.manifold()) + ")");
            return it->second;
        }

    private:
        double m_w0;
        std::map<std::pair<int, int>, double> m_freqs;
    };

    /// Generalized Laguerre polynomial L_n^k(x) by the upward three-term recurrence in n.
    inline double laguerre(int n, int k, double x)
    {
        if (n < 0 || k < 0)
            throw std::domain_error("laguerre: n and k must be nonnegative");
        if (n == 0)
            return 1.0;
        double prev = 1.0;
        double cur = 1.0 + k - x;
        for (int j = 1; j < n; ++j)
        {
            const double next = ((2.0 * j + 1.0 + k - x) * cur - (j + k) * prev) / (j + 1.0);
            prev = cur;
            cur = next;
        }
        return cur;
    }

    /// ln C_{n,l} for w0 = 1, evaluated with log-gamma so large l + n do not overflow.
    inline double log_mode_norm(int n, int l)
    {
        return 0.5 * ((l + 1) * std::log(2.0) + log_factorial(n) - std::log(pi) - log_factorial(l + n));
    }

    inline double mode_norm(int n, int l, double w0 = 1.0) { return std::exp(log_mode_norm(n, l)) / w0; }

    /// Real radial part C_{n,l} x^l e^{-x^2} L_n^l(2x^2) at w0 = 1.
    inline double mode_radial(const ModeIndex& mode, double x)
    {
        const double lag = laguerre(mode.n, mode.l, 2.0 * x * x);
        if (x == 0.0)
            return mode.l == 0 ? std::exp(log_mode_norm(mode.n, 0)) * lag : 0.0;
        // Combine the power, the Gaussian and the normalization in log space.
        const double log_mag = log_mode_norm(mode.n, mode.l) + mode.l * std::log(x) - x * x;
        return std::exp(log_mag) * lag;
    }

    inline std::complex<double> mode_function(const ModeIndex& mode, double r, double phi, double w0)
    {
        if (r < 0.0)
            throw std::domain_error("mode_function: r must be nonnegative");
        if (!(w0 > 0.0))
            throw std::domain_error("mode_function: w0 must be positive");
        const double radial = mode_radial(mode, r / w0) / w0;
        return std::polar(1.0, mode.l * phi) * radial;
    }

    /// <f_a | f_b> over the transverse plane. The azimuthal integral is the
    /// selection rule 2 pi delta_{l_a l_b}; only the radial part is numeric.
    /// The result does not depend on w0 (both the measure and the modes scale).
    inline std::complex<double> mode_overlap(const ModeIndex& a, const ModeIndex& b, double w0 = 1.0,
                                             const QuadratureConfig& cfg = {})
    {
        if (!(w0 > 0.0))
            throw std::domain_error("mode_overlap: w0 must be positive");
        if (a.l != b.l)
            return {0.0, 0.0};
        auto integrand = [&](double x) { return x * mode_radial(a, x) * mode_radial(b, x); };
        // Normalized modes bound |<a|b>| by one, so the relative tolerance also serves as an absolute one.
        QuadratureConfig local = cfg;
        local.abs_tol = std::max(cfg.abs_tol, cfg.rel_tol / (2.0 * pi));
        auto res = radial_quadrature(integrand, local);
        return {2.0 * pi * require_converged(res, "mode_overlap"), 0.0};
    }
} // namespace fluxgrow
