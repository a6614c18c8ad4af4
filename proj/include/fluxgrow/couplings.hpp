#pragma once

// Coupling matrix elements between collective atomic Laguerre-Gauss modes.
//
// Index convention (fixed everywhere in this library): chi_{3m}^{row, col}
// with row = radial index of the optical-polarization mode P (l = 3m) and
// col = radial index of the spin mode S (l = 3m + 1). For the second step
// chi~_{3m}^{row, col} couples P (l = 3m) to S (l = 3m - 2).

#include <cmath>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "csv.hpp"
#include "modes.hpp"
#include "numeric.hpp"
#include "quadrature.hpp"

namespace fluxgrow
{
    enum class ProfileKind
    {
        KappaStep1,      ///< kappa(x) = x^2 / (a^3 + x^3)
        KappaTildeStep2, ///< kappa~(x) = x^2
    };

    struct SpatialProfile
    {
        ProfileKind kind = ProfileKind::KappaStep1;
        double a = 0.0; ///< r0 / w0, used only by KappaStep1

        static SpatialProfile step1(double cutoff)
        {
            if (!(cutoff > 0.0))
                throw std::invalid_argument("SpatialProfile: cutoff a must be positive");
            return {ProfileKind::KappaStep1, cutoff};
        }
        static SpatialProfile step2() { return {ProfileKind::KappaTildeStep2, 0.0}; }

        double operator()(double x) const;
    };

    inline double kappa(double x, double a)
    {
        if (x < 0.0 || !(a > 0.0))
            throw std::domain_error("kappa: requires x >= 0 and a > 0");
        return x * x / (a * a * a + x * x * x);
    }

    inline double SpatialProfile::operator()(double x) const
    {
        return kind == ProfileKind::KappaStep1 ? kappa(x, a) : x * x;
    }

    inline std::string to_string(ProfileKind k)
    {
        return k == ProfileKind::KappaStep1 ? "KappaStep1" : "KappaTildeStep2";
    }

    namespace detail
    {
        inline QuadratureConfig coupling_quadrature(double a)
        {
            QuadratureConfig cfg;
            cfg.rel_tol = 1e-12;
            cfg.abs_tol = 1e-13;
            if (a > 0.0)
                cfg.breakpoints = {a, 10.0 * a, 100.0 * a};
            cfg.breakpoints.push_back(1.0);
            return cfg;
        }
    } // namespace detail

    /// chi_{3m}^{n_p, n_s} at finite cutoff a, by quadrature of
    /// C int e^{-2x^2} x^{6m+2} kappa(x) L_{n_s}^{3m+1}(2x^2) L_{n_p}^{3m}(2x^2) dx.
    inline QuadratureResult chi_numeric_result(int m, int n_s, int n_p, double a)
    {
        if (m < 0 || n_s < 0 || n_p < 0)
            throw std::domain_error("chi_numeric: indices must be nonnegative");
        if (!(a > 0.0))
            throw std::domain_error("chi_numeric: cutoff a must be positive");
        const int l = 3 * m;
        const double log_c = (l + 2) * std::log(2.0) +
                             0.5 * (std::log(2.0) + log_factorial(n_s) + log_factorial(n_p) -
                                    log_factorial(l + 1 + n_s) - log_factorial(l + n_p));
        auto integrand = [=](double x) {
            if (x == 0.0)
                return 0.0;
            const double y = 2.0 * x * x;
            const double weight = std::exp(log_c + (2 * l + 2) * std::log(x) - y);
            return weight * kappa(x, a) * laguerre(n_s, l + 1, y) * laguerre(n_p, l, y);
        };
        return radial_quadrature(integrand, detail::coupling_quadrature(a));
    }

    inline double chi_numeric(int m, int n_s, int n_p, double a)
    {
        return require_converged(chi_numeric_result(m, n_s, n_p, a),
                                 "chi_numeric(m=" + std::to_string(m) + ", n=" + std::to_string(n_s) +
                                     ", n'=" + std::to_string(n_p) + ")");
    }

    /// a -> 0 limit: sqrt(2 (3m+n_p)! n_s! / (n_p! (3m+1+n_s)!)) for n_s >= n_p, else 0.
    inline double chi_analytic_a0(int m, int n_s, int n_p)
    {
        if (m < 0 || n_s < 0 || n_p < 0)
            throw std::domain_error("chi_analytic_a0: indices must be nonnegative");
        if (n_s < n_p)
            return 0.0;
        const int l = 3 * m;
        return std::exp(0.5 * (std::log(2.0) + log_factorial(l + n_p) + log_factorial(n_s) -
                               log_factorial(n_p) - log_factorial(l + 1 + n_s)));
    }

    /// Leading small-a behaviour of the residual coupling chi_0^{n',0}, n' >= 1.
    inline double chi_correction_small_a(double a)
    {
        if (a < 0.0)
            throw std::domain_error("chi_correction_small_a: a must be nonnegative");
        return -(8.0 * pi / 3.0) * std::sqrt(2.0 / 3.0) * a * a;
    }

    /// chi~_{3m}^{n_p, 0} = (1/2) sqrt((3m)! / (3m-2)!) delta_{n_p, 0}.
    inline double chi_tilde(int m, int n_p)
    {
        if (m < 1)
            throw std::domain_error("chi_tilde: m must be >= 1 (no l = 3m - 2 mode for m = 0)");
        if (n_p < 0)
            throw std::domain_error("chi_tilde: n' must be nonnegative");
        if (n_p > 0)
            return 0.0;
        return 0.5 * std::exp(0.5 * log_factorial_ratio(3 * m, 3 * m - 2));
    }

    /// chi~_{3m}^{n_p, n_s} by quadrature of
    /// C~ int e^{-2x^2} x^{6m+1} L_{n_s}^{3m-2}(2x^2) L_{n_p}^{3m}(2x^2) dx.
    inline QuadratureResult chi_tilde_numeric_result(int m, int n_s, int n_p)
    {
        if (m < 1)
            throw std::domain_error("chi_tilde_numeric: m must be >= 1");
        if (n_s < 0 || n_p < 0)
            throw std::domain_error("chi_tilde_numeric: indices must be nonnegative");
        const int l = 3 * m;
        const double log_c = (l + 1) * std::log(2.0) +
                             0.5 * (log_factorial(n_s) + log_factorial(n_p) - log_factorial(l - 2 + n_s) -
                                    log_factorial(l + n_p));
        auto integrand = [=](double x) {
            if (x == 0.0)
                return 0.0;
            const double y = 2.0 * x * x;
            const double weight = std::exp(log_c + (2 * l + 1) * std::log(x) - y);
            return weight * laguerre(n_s, l - 2, y) * laguerre(n_p, l, y);
        };
        return radial_quadrature(integrand, detail::coupling_quadrature(0.0));
    }

    inline double chi_tilde_numeric(int m, int n_s, int n_p)
    {
        return require_converged(chi_tilde_numeric_result(m, n_s, n_p),
                                 "chi_tilde_numeric(m=" + std::to_string(m) + ")");
    }

    enum class CouplingMethod
    {
        Quadrature,
        AnalyticLimit,
    };

    inline std::string to_string(CouplingMethod m)
    {
        return m == CouplingMethod::Quadrature ? "Quadrature" : "AnalyticLimit";
    }

    /// Immutable table of coupling matrix elements keyed by (m, n_row = P, n_col = S).
    /// For KappaTildeStep2 the key m is the chi~ index (couples l = 3m - 2 to 3m)
    /// and only the channels with n_row = 0 or n_col = 0 are stored.
    class CouplingTable
    {
    public:
        using Key = std::tuple<int, int, int>;

        CouplingTable(SpatialProfile profile, CouplingMethod method, std::map<Key, double> entries)
            : m_profile(profile), m_method(method), m_entries(std::move(entries))
        {
        }

        const SpatialProfile& profile() const { return m_profile; }
        CouplingMethod computed_by() const { return m_method; }
        const std::map<Key, double>& entries() const { return m_entries; }
        static constexpr const char* index_convention = "chi_{3m}^{n_row(P), n_col(S)}";

        bool contains(int m, int row, int col) const { return m_entries.count({m, row, col}) != 0; }

        double at(int m, int row, int col) const
        {
            auto it = m_entries.find({m, row, col});
            if (it == m_entries.end())
                throw std::out_of_range("CouplingTable: no entry (m=" + std::to_string(m) + ", row=" +
                                        std::to_string(row) + ", col=" + std::to_string(col) + ")");
            return it->second;
        }

        /// Entry or 0 for channels the table does not carry.
        double value_or_zero(int m, int row, int col) const
        {
            auto it = m_entries.find({m, row, col});
            return it == m_entries.end() ? 0.0 : it->second;
        }

        void write_csv(std::ostream& out) const
        {
            CsvWriter csv(out, {"m", "n_row", "n_col", "value", "method", "a"});
            for (const auto& [key, value] : m_entries)
            {
                const auto& [m, row, col] = key;
                csv.row({static_cast<long long>(m), static_cast<long long>(row), static_cast<long long>(col), value,
                         to_string(m_method), m_profile.a});
            }
        }

    private:
        SpatialProfile m_profile;
        CouplingMethod m_method;
        std::map<Key, double> m_entries;
    };

    /// Builds the table for m <= m_max (m >= 1 for step 2) and radial indices <= n_max.
    inline CouplingTable build_coupling_table(const SpatialProfile& profile, int m_max, int n_max,
                                              CouplingMethod method = CouplingMethod::Quadrature,
                                              unsigned jobs = 1)
    {
        if (m_max < 0 || n_max < 0)
            throw std::invalid_argument("build_coupling_table: bounds must be nonnegative");
        if (profile.kind == ProfileKind::KappaTildeStep2 && method == CouplingMethod::AnalyticLimit)
            throw std::invalid_argument("build_coupling_table: step-2 tables are computed by quadrature");

        std::vector<CouplingTable::Key> keys;
        const bool step1 = profile.kind == ProfileKind::KappaStep1;
        for (int m = step1 ? 0 : 1; m <= m_max; ++m)
            for (int row = 0; row <= n_max; ++row)
                for (int col = 0; col <= n_max; ++col)
                    if (step1 || row == 0 || col == 0)
                        keys.emplace_back(m, row, col);

        std::vector<double> values(keys.size());
        parallel_for(keys.size(), jobs, [&](std::size_t i) {
            const auto [m, row, col] = keys[i];
            try
            {
                if (!step1)
                    values[i] = chi_tilde_numeric(m, col, row);
                else if (method == CouplingMethod::AnalyticLimit)
                    values[i] = chi_analytic_a0(m, col, row);
                else
                    values[i] = chi_numeric(m, col, row, profile.a);
            }
            catch (const QuadratureError& e)
            {
                std::ostringstream msg;
                msg << "build_coupling_table: entry (m=" << m << ", row=" << row << ", col=" << col
                    << ") failed: " << e.what();
                throw QuadratureError(msg.str(), e.partial());
            }
        });

        std::map<CouplingTable::Key, double> entries;
        for (std::size_t i = 0; i < keys.size(); ++i)
        {
            double v = values[i];
            // chi~ vanishes identically for row > 0 on the n_col = 0 column.
            if (!step1 && std::get<2>(keys[i]) == 0 && std::get<1>(keys[i]) > 0)
                v = 0.0;
            entries.emplace(keys[i], v);
        }
        return CouplingTable(profile, method, std::move(entries));
    }
} // namespace fluxgrow
