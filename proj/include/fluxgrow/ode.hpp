#pragma once

// Adaptive Dormand-Prince integration of complex linear systems
// dy/dt = -i G(t) y on a prescribed output grid.

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include <Eigen/Dense>

namespace fluxgrow
{
    using cplx = std::complex<double>;
    using ComplexState = std::vector<cplx>;

    struct OdeTolerance
    {
        double abs_tol = 1e-11;
        double rel_tol = 1e-10;
        double initial_step = 1e-3;
        double min_step = 1e-12;
        long max_steps = 20'000'000;
    };

    class OdeError : public std::runtime_error
    {
    public:
        OdeError(const std::string& what, double when) : std::runtime_error(what), m_time(when) {}
        double time() const noexcept { return m_time; }

    private:
        double m_time;
    };

    struct OdeStats
    {
        long accepted = 0;
        long rejected = 0;
        double max_norm_increase = 0.0; ///< largest growth of ||y|| over one accepted step
    };

    /// Integrates `system(y, dydt, t)` across `grid`, calling `observer(y, t)` at every grid point
    /// (including the first). Throws OdeError with the offending time if the step size underflows.
    template <typename System, typename Observer>
    OdeStats integrate_on_grid(System&& system, ComplexState& y, const std::vector<double>& grid, Observer&& observer,
                               const OdeTolerance& tol = {})
    {
        namespace odeint = boost::numeric::odeint;
        if (grid.empty())
            throw std::invalid_argument("integrate_on_grid: empty time grid");
        for (std::size_t i = 1; i < grid.size(); ++i)
            if (!(grid[i] > grid[i - 1]))
                throw std::invalid_argument("integrate_on_grid: time grid must be strictly increasing");

        auto stepper = odeint::make_controlled<odeint::runge_kutta_dopri5<ComplexState>>(tol.abs_tol, tol.rel_tol);
        auto norm = [](const ComplexState& v) {
            double s = 0.0;
            for (const auto& c : v)
                s += std::norm(c);
            return std::sqrt(s);
        };

        OdeStats stats;
        double t = grid.front();
        double dt = tol.initial_step;
        observer(static_cast<const ComplexState&>(y), t);
        for (std::size_t k = 1; k < grid.size(); ++k)
        {
            const double target = grid[k];
            while (t < target)
            {
                const bool last = t + dt >= target;
                double step = last ? target - t : dt;
                const double before = norm(y);
                const double t_before = t;
                const auto result = stepper.try_step(system, y, t, step);
                if (result == odeint::success)
                {
                    ++stats.accepted;
                    stats.max_norm_increase = std::max(stats.max_norm_increase, norm(y) - before);
                    if (last)
                        t = target; // snap exactly onto the grid point
                    // keep the proposed size unless the clamped last step shrank it
                    dt = last ? std::max(dt, step) : step;
                }
                else
                {
                    ++stats.rejected;
                    dt = step;
                    if (dt < tol.min_step * std::max(1.0, std::abs(t_before)))
                    {
                        std::ostringstream msg;
                        msg << "ODE step size underflow (dt = " << dt << ") at t = " << t_before;
                        throw OdeError(msg.str(), t_before);
                    }
                }
                if (stats.accepted + stats.rejected > tol.max_steps)
                    throw OdeError("ODE step budget exhausted at t = " + std::to_string(t), t);
            }
            observer(static_cast<const ComplexState&>(y), t);
        }
        return stats;
    }

    /// Uniform grid with `points` samples on [t0, t1].
    inline std::vector<double> uniform_grid(double t0, double t1, std::size_t points)
    {
        if (points < 2 || !(t1 > t0))
            throw std::invalid_argument("uniform_grid: need t1 > t0 and at least two points");
        std::vector<double> g(points);
        for (std::size_t i = 0; i < points; ++i)
            g[i] = t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(points - 1);
        g.back() = t1;
        return g;
    }

    inline Eigen::VectorXcd to_eigen(const ComplexState& y)
    {
        return Eigen::Map<const Eigen::VectorXcd>(y.data(), static_cast<Eigen::Index>(y.size()));
    }

    inline ComplexState from_eigen(const Eigen::VectorXcd& v) { return ComplexState(v.data(), v.data() + v.size()); }
} // namespace fluxgrow
