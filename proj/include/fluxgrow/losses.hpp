#pragma once

// Non-adiabatic losses during flux insertion, per atom at radius x = r / w0.
// Everything is expressed in the dimensionless groups Omega T, g T, gamma T
// with tau = t / T; the two-photon detuning is zero (resonant worst case).

#include <cmath>
#include <complex>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "couplings.hpp"
#include "csv.hpp"
#include "numeric.hpp"
#include "ode.hpp"
#include "quadrature.hpp"
#include "stirap.hpp"

namespace fluxgrow
{
    struct LossParams
    {
        double Omega_T = 60.0;
        double g_T = 20.0;
        double gamma_T = 100.0;
        double a = 0.005;
        double xi = 0.25;
        double tau1 = 6.0;
        /// Radial density profile n(x); Gaussian e^{-x^2/xi^2} when empty.
        std::function<double(double)> density{};

        void validate() const
        {
            if (!(Omega_T > 0.0) || !(g_T > 0.0) || !(gamma_T >= 0.0) || !(a > 0.0) || !(xi > 0.0))
                throw std::invalid_argument(
                    "LossParams: Omega_T, g_T, a, xi must be positive and gamma_T nonnegative");
        }

        double density_at(double x) const { return density ? density(x) : std::exp(-x * x / (xi * xi)); }

        /// Spatial factor f_1 = kappa(x) for step one, f_2 = x^2 for step two.
        double profile(Step step, double x) const { return step == Step::One ? kappa(x, a) : x * x; }
    };

    struct MixingAngles
    {
        double phi = 0.0;
        double theta = 0.0;
        Step which_step = Step::One;
    };

    namespace detail
    {
        /// (1 + e^u)^{-1/2} and its derivative, stable for large |u|.
        inline double sigmoid_root(double u) { return 1.0 / std::sqrt(1.0 + std::exp(u)); }
        inline double sigmoid_root_derivative(double u)
        {
            const double logistic = 1.0 / (1.0 + std::exp(-u));
            return -0.5 * logistic * sigmoid_root(u);
        }

        struct PulsePair
        {
            double active, omega0, d_active, d_omega0;
        };

        inline PulsePair loss_pulses(Step step, double x, double tau, const LossParams& p)
        {
            const double amp = p.Omega_T * p.profile(step, x);
            if (step == Step::One)
                return {amp * sigmoid_root(tau), p.Omega_T * sigmoid_root(-tau), amp * sigmoid_root_derivative(tau),
                        -p.Omega_T * sigmoid_root_derivative(-tau)};
            const double u = 2.0 * p.tau1 - tau;
            return {amp * sigmoid_root(u), p.Omega_T * sigmoid_root(-u), -amp * sigmoid_root_derivative(u),
                    p.Omega_T * sigmoid_root_derivative(-u)};
        }

        /// Step two swaps roles: phi_2 = atan(Omega_2 / Omega_0).
        inline void ordered(Step step, const PulsePair& pp, double& first, double& second, double& d_first,
                            double& d_second)
        {
            if (step == Step::One)
            {
                first = pp.active;
                second = pp.omega0;
                d_first = pp.d_active;
                d_second = pp.d_omega0;
            }
            else
            {
                first = pp.omega0;
                second = pp.active;
                d_first = pp.d_omega0;
                d_second = pp.d_active;
            }
        }

        inline double step_center(Step step, const LossParams& p) { return step == Step::One ? 0.0 : 2.0 * p.tau1; }
    } // namespace detail

    inline MixingAngles mixing_angles(Step step, double x, double tau, const LossParams& params)
    {
        if (x < 0.0)
            throw std::domain_error("mixing_angles: x must be nonnegative");
        double o_first, o_second, d1, d2;
        detail::ordered(step, detail::loss_pulses(step, x, tau, params), o_first, o_second, d1, d2);
        return {std::atan2(o_second, o_first), std::atan2(std::hypot(o_first, o_second), params.g_T), step};
    }

    /// Closed-form survival e_a(x) = exp{-(gamma/4T)(2/g^2 - 1/(g^2+Omega^2) - 1/(g^2+f_a^2 Omega^2))}.
    inline double survival_closed_form(double x, const LossParams& params, Step step)
    {
        params.validate();
        const double g2 = params.g_T * params.g_T;
        const double o2 = params.Omega_T * params.Omega_T;
        const double f = params.profile(step, x);
        const double bracket = 2.0 / g2 - 1.0 / (g2 + o2) - 1.0 / (g2 + f * f * o2);
        return std::exp(-0.25 * params.gamma_T * bracket);
    }

    /// exp{-(2 gamma / g^2) int (phidot^2 sin^2 theta + thetadot^2 cos^2 theta) dt} by quadrature.
    inline double survival_integral_numeric(double x, const LossParams& params, Step step,
                                            const QuadratureConfig& cfg = {1e-11, 1e-14, 2'000'000, {}})
    {
        params.validate();
        const double g = params.g_T;
        auto integrand = [&](double tau) {
            double o1, o2, d1, d2;
            detail::ordered(step, detail::loss_pulses(step, x, tau, params), o1, o2, d1, d2);
            const double r2 = o1 * o1 + o2 * o2;
            if (r2 == 0.0)
                return 0.0;
            const double r = std::sqrt(r2);
            const double phi_dot = (o1 * d2 - o2 * d1) / r2;
            const double r_dot = (o1 * d1 + o2 * d2) / r;
            const double theta_dot = g * r_dot / (g * g + r2);
            const double sin2 = r2 / (g * g + r2);
            return phi_dot * phi_dot * sin2 + theta_dot * theta_dot * (1.0 - sin2);
        };
        QuadratureConfig local = cfg;
        const double c = detail::step_center(step, params);
        local.breakpoints.insert(local.breakpoints.end(), {c - 10.0, c - 3.0, c + 3.0, c + 10.0});
        const auto res = integrate_real_line(integrand, c, local);
        const double integral = require_converged(res, "survival_integral_numeric");
        return std::exp(-2.0 * params.gamma_T / (g * g) * integral);
    }

    struct FiveLevelOptions
    {
        double half_window = 25.0;
        OdeTolerance tolerance{1e-12, 1e-10, 1e-3, 1e-14, 50'000'000};
    };

    /// Unnormalized dark vector of the five-level model over (e, s, r, a1, a2).
    inline Eigen::VectorXcd five_level_dark(double o_first, double o_second, double g)
    {
        Eigen::VectorXcd v(5);
        v << 0.0, -g * g, 0.0, g * o_first, g * o_second;
        return v / v.norm();
    }

    /// Brute-force oracle: evolves the non-Hermitian five-level model from the dark state at the
    /// window start and returns the population in the instantaneous dark state at the window end.
    inline double five_level_evolve(double x, const LossParams& params, Step step, const FiveLevelOptions& opt = {})
    {
        params.validate();
        const double g = params.g_T;
        const double gam = params.gamma_T;
        auto pulses = [&](double tau) {
            double o1, o2, d1, d2;
            detail::ordered(step, detail::loss_pulses(step, x, tau, params), o1, o2, d1, d2);
            return std::pair{o1, o2};
        };
        auto system = [&](const ComplexState& y, ComplexState& dydt, double tau) {
            const auto [o1, o2] = pulses(tau);
            const cplx mi(0.0, -1.0);
            dydt.resize(5);
            // H = [[-i gam, o1, 0, g, 0], [o1, 0, o2, 0, 0], [0, o2, -i gam, 0, g], [g, 0, 0, 0, 0], [0, 0, g, 0, 0]]
            dydt[0] = mi * (cplx(0.0, -gam) * y[0] + o1 * y[1] + g * y[3]);
            dydt[1] = mi * (o1 * y[0] + o2 * y[2]);
            dydt[2] = mi * (o2 * y[1] + cplx(0.0, -gam) * y[2] + g * y[4]);
            dydt[3] = mi * (g * y[0]);
            dydt[4] = mi * (g * y[2]);
        };
        const double c = detail::step_center(step, params);
        const double t0 = c - opt.half_window, t1 = c + opt.half_window;
        auto [s1, s2] = pulses(t0);
        ComplexState y = from_eigen(five_level_dark(s1, s2, g));
        integrate_on_grid(system, y, {t0, t1}, [](const ComplexState&, double) {}, opt.tolerance);
        auto [e1, e2] = pulses(t1);
        return std::norm(five_level_dark(e1, e2, g).dot(to_eigen(y)));
    }

    namespace detail
    {
        inline QuadratureConfig radial_average_config(const LossParams& p)
        {
            QuadratureConfig cfg;
            cfg.rel_tol = 1e-10;
            cfg.abs_tol = 1e-14;
            cfg.breakpoints = {p.a, 10.0 * p.a, p.xi, 3.0 * p.xi};
            return cfg;
        }

        inline double density_norm(const LossParams& p)
        {
            auto r = radial_quadrature([&](double x) { return x * p.density_at(x); }, radial_average_config(p));
            const double n = require_converged(r, "density normalization");
            if (!(n > 0.0))
                throw std::invalid_argument("LossParams: density is not normalizable");
            return n;
        }
    } // namespace detail

    /// Overlap of the initial state with the dark state, averaged over the atomic density.
    inline double dark_overlap_pin(const LossParams& params)
    {
        params.validate();
        const double o2 = params.Omega_T * params.Omega_T;
        const double g2 = params.g_T * params.g_T;
        auto integrand = [&](double x) {
            const double k = kappa(x, params.a);
            return x * params.density_at(x) * o2 * k * k / (g2 + o2 * k * k);
        };
        auto r = radial_quadrature(integrand, detail::radial_average_config(params));
        return require_converged(r, "dark_overlap_pin") / detail::density_norm(params);
    }

    struct FidelityBreakdown
    {
        double p = 0.0;
        double p_in = 0.0;
        double F = 0.0;
    };

    /// F = p * p_in with p the density average of e_1(x) e_2(x).
    inline FidelityBreakdown flux_insertion_fidelity(const LossParams& params)
    {
        params.validate();
        auto integrand = [&](double x) {
            return x * params.density_at(x) * survival_closed_form(x, params, Step::One) *
                   survival_closed_form(x, params, Step::Two);
        };
        auto r = radial_quadrature(integrand, detail::radial_average_config(params));
        FidelityBreakdown out;
        out.p = require_converged(r, "flux_insertion_fidelity") / detail::density_norm(params);
        out.p_in = dark_overlap_pin(params);
        out.F = out.p * out.p_in;
        return out;
    }

    struct SurfacePoint
    {
        double Omega_T, g_T;
        FidelityBreakdown value;
    };

    /// Scans F over the (Omega T, g T) grid; rows ordered Omega-major.
    inline std::vector<SurfacePoint> fidelity_surface(const LossParams& base, const std::vector<double>& omega_grid,
                                                      const std::vector<double>& g_grid, unsigned jobs = 1)
    {
        std::vector<SurfacePoint> out(omega_grid.size() * g_grid.size());
        parallel_for(out.size(), jobs, [&](std::size_t i) {
            LossParams p = base;
            p.Omega_T = omega_grid[i / g_grid.size()];
            p.g_T = g_grid[i % g_grid.size()];
            out[i] = {p.Omega_T, p.g_T, flux_insertion_fidelity(p)};
        });
        return out;
    }

    inline void write_surface_csv(std::ostream& out, const std::vector<SurfacePoint>& surface)
    {
        CsvWriter csv(out, {"Omega_T", "g_T", "p", "p_in", "F"});
        for (const auto& s : surface)
            csv.row({s.Omega_T, s.g_T, s.value.p, s.value.p_in, s.value.F});
    }

    /// Evenly spaced values on [lo, hi].
    inline std::vector<double> linspace(double lo, double hi, std::size_t count)
    {
        if (count == 0)
            return {};
        if (count == 1)
            return {lo};
        std::vector<double> v(count);
        for (std::size_t i = 0; i < count; ++i)
            v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
        return v;
    }
} // namespace fluxgrow
