#pragma once

// Interacting photons in the lowest Landau manifold (l = 0, 3, 6, ...).
// Polynomials are written in w = z^3; z is measured in units of w0 with the
// orientation z = x - i y. Only moduli of overlaps are compared physically.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "csv.hpp"
#include "fock.hpp"
#include "krylov.hpp"
#include "numeric.hpp"

namespace fluxgrow
{
    struct InteractionParams
    {
        double C6 = 8.0 / 3.0;
        double a_B = 1.0;
        double l_B = 1.0;

        double V0() const { return 3.0 * C6 / (8.0 * l_B * l_B * a_B * a_B * a_B * a_B); }
        /// The zeroth pseudopotential dominates only when l_B >> a_B.
        bool regime_ok() const { return a_B < l_B; }
    };

    inline double haldane_v0(double C6, double l_B, double a_B)
    {
        if (!(C6 > 0.0) || !(l_B > 0.0) || !(a_B > 0.0))
            throw std::invalid_argument("haldane_v0: inputs must be positive");
        return InteractionParams{C6, a_B, l_B}.V0();
    }

    /// (V0/2) (l1+l2)! sqrt(2^{-2(l1+l2)} / (l1! l2! l3! l4!)) delta_{l1+l2, l3+l4}
    inline double interaction_element(int l1, int l2, int l3, int l4, double V0)
    {
        if (l1 < 0 || l2 < 0 || l3 < 0 || l4 < 0)
            throw std::domain_error("interaction_element: angular momenta must be nonnegative");
        if (l1 + l2 != l3 + l4)
            return 0.0;
        const int s = l1 + l2;
        const double log_v = log_factorial(s) +
                             0.5 * (-2.0 * s * std::log(2.0) - log_factorial(l1) - log_factorial(l2) -
                                    log_factorial(l3) - log_factorial(l4));
        return 0.5 * V0 * std::exp(log_v);
    }

    /// sum over ordered (l1, l2, l3, l4) of V a+_{l1} a+_{l2} a_{l3} a_{l4} on the basis modes.
    inline SparseOperator build_hint(const FockBasis& basis, double V0, unsigned jobs = 1)
    {
        const auto& modes = basis.modes();
        const std::size_t M = modes.size();
        std::vector<std::vector<Eigen::Triplet<double>>> rows(basis.dimension());
        parallel_for(basis.dimension(), jobs, [&](std::size_t j) {
            const auto& src = basis.occupation(j);
            std::map<std::size_t, double> acc;
            for (std::size_t p3 = 0; p3 < M; ++p3)
            {
                if (!src[p3])
                    continue;
                for (std::size_t p4 = 0; p4 < M; ++p4)
                {
                    auto occ = src;
                    if (!occ[p4])
                        continue;
                    double amp = std::sqrt(static_cast<double>(occ[p4]));
                    --occ[p4];
                    if (!occ[p3])
                        continue;
                    amp *= std::sqrt(static_cast<double>(occ[p3]));
                    --occ[p3];
                    const int total = modes[p3] + modes[p4];
                    for (std::size_t p1 = 0; p1 < M; ++p1)
                    {
                        auto p2 = basis.position(total - modes[p1]);
                        if (!p2)
                            continue;
                        const double v = interaction_element(modes[p1], modes[*p2], modes[p3], modes[p4], V0);
                        if (v == 0.0)
                            continue;
                        auto out = occ;
                        double a = amp * std::sqrt(static_cast<double>(out[*p2]) + 1.0);
                        ++out[*p2];
                        a *= std::sqrt(static_cast<double>(out[p1]) + 1.0);
                        ++out[p1];
                        if (auto i = basis.find(out))
                            acc[*i] += v * a;
                    }
                }
            }
            for (const auto& [i, v] : acc)
                rows[j].emplace_back(static_cast<int>(i), static_cast<int>(j), v);
        });
        std::vector<Eigen::Triplet<double>> triplets;
        for (auto& r : rows)
            triplets.insert(triplets.end(), r.begin(), r.end());
        return SparseOperator::from_triplets(basis.dimension(), triplets);
    }

    /// Lowest-Landau-level modes l = 0, 3, ..., 3 m_max.
    inline std::vector<int> lll_modes(int m_max)
    {
        if (m_max < 0)
            throw std::invalid_argument("lll_modes: m_max must be nonnegative");
        std::vector<int> modes;
        for (int m = 0; m <= m_max; ++m)
            modes.push_back(3 * m);
        return modes;
    }

    /// Default orbital cutoff m_max = 2(N-1) + 2.
    inline int default_m_max(int N) { return 2 * std::max(N - 1, 0) + 2; }

    /// A bosonic state as a sparse map of Fock states to real amplitudes.
    struct SymmetricState
    {
        std::map<FockState, double> amplitudes;

        double norm() const
        {
            double s = 0.0;
            for (const auto& [k, v] : amplitudes)
                s += v * v;
            return std::sqrt(s);
        }

        Eigen::VectorXd embed(const FockBasis& basis) const
        {
            Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis.dimension()));
            for (const auto& [state, amp] : amplitudes)
            {
                auto i = basis.find(state);
                if (!i)
                    throw std::out_of_range("SymmetricState::embed: " + to_string(state) + " is outside the basis");
                v(static_cast<Eigen::Index>(*i)) = amp;
            }
            return v;
        }

        int max_mode() const
        {
            int lmax = -1;
            for (const auto& [state, amp] : amplitudes)
                if (!state.empty())
                    lmax = std::max(lmax, state.rbegin()->first);
            return lmax;
        }

        int min_mode() const
        {
            int lmin = -1;
            for (const auto& [state, amp] : amplitudes)
                if (!state.empty())
                    lmin = lmin < 0 ? state.begin()->first : std::min(lmin, state.begin()->first);
            return lmin;
        }

        void write_csv(std::ostream& out) const
        {
            CsvWriter csv(out, {"occupation", "amplitude"});
            for (const auto& [state, amp] : amplitudes)
                csv.row({to_string(state), amp});
        }
    };

    inline double overlap(const SymmetricState& a, const SymmetricState& b)
    {
        double s = 0.0;
        for (const auto& [state, amp] : a.amplitudes)
        {
            auto it = b.amplitudes.find(state);
            if (it != b.amplitudes.end())
                s += amp * it->second;
        }
        return s;
    }

    inline constexpr int max_expansion_photons = 5;

    /// prod_k w_k^m prod_{i<j} (w_i - w_j)^2 mapped to normalized Fock amplitudes,
    /// mode l = 3 * (exponent of w), single-particle weight nu_l = 1 / C_{0,l}.
    inline SymmetricState polynomial_state(int N, int m)
    {
        if (N < 0 || m < 0)
            throw std::invalid_argument("polynomial_state: N and m must be nonnegative");
        if (N > max_expansion_photons)
            throw std::invalid_argument("polynomial_state: N = " + std::to_string(N) + " exceeds the expansion cap of " +
                                        std::to_string(max_expansion_photons));
        std::map<std::vector<int>, long long> poly{{std::vector<int>(N, m), 1}};
        for (int i = 0; i < N; ++i)
            for (int j = i + 1; j < N; ++j)
            {
                std::map<std::vector<int>, long long> next;
                for (const auto& [e, c] : poly)
                    for (auto [di, dj, f] : {std::tuple{2, 0, 1LL}, std::tuple{1, 1, -2LL}, std::tuple{0, 2, 1LL}})
                    {
                        auto e2 = e;
                        e2[i] += di;
                        e2[j] += dj;
                        next[e2] += c * f;
                    }
                poly.clear();
                for (const auto& [e, c] : next)
                    if (c != 0)
                        poly.emplace(e, c);
            }

        std::map<std::vector<int>, long long> partitions;
        for (const auto& [e, c] : poly)
        {
            auto key = e;
            std::sort(key.begin(), key.end());
            auto [it, inserted] = partitions.emplace(key, c);
            if (!inserted && it->second != c)
                throw std::logic_error("polynomial_state: expansion is not symmetric");
        }

        auto log_nu = [](int l) { return 0.5 * (std::log(pi) + log_factorial(l) - (l + 1) * std::log(2.0)); };
        SymmetricState out;
        for (const auto& [lambda, c] : partitions)
        {
            FockState s;
            double log_w = 0.0;
            for (int w : lambda)
            {
                ++s[3 * w];
                log_w += log_nu(3 * w);
            }
            for (const auto& [l, k] : s)
                log_w -= 0.5 * log_factorial(k);
            out.amplitudes[s] = static_cast<double>(c) * std::exp(log_w);
        }
        const double nrm = out.norm();
        for (auto& [s, v] : out.amplitudes)
            v /= nrm;
        return out;
    }

    inline SymmetricState laughlin_state(int N) { return polynomial_state(N, 0); }
    inline SymmetricState quasihole_state(int N, int m) { return polynomial_state(N, m); }

    /// Homogeneous degree of the quasi-hole polynomial in z: 3 m N + 3 N (N - 1).
    inline int quasihole_angular_momentum(int N, int m) { return 3 * m * N + 3 * N * (N - 1); }

    /// <state| L |state> for a state given as Fock amplitudes.
    inline double angular_momentum_expectation(const SymmetricState& s)
    {
        double L = 0.0;
        for (const auto& [state, amp] : s.amplitudes)
            L += amp * amp * angular_momentum(state);
        return L / (s.norm() * s.norm());
    }

    struct SpectrumOptions
    {
        std::size_t dense_limit = 2000;
        double zero_tol = 1e-10; ///< eigenvalues <= zero_tol * V0 count as zero
        unsigned jobs = 1;
        LanczosEigenOptions lanczos{};
    };

    struct SectorSpectrum
    {
        int N = 0;
        int L = 0;
        std::size_t dimension = 0;
        Eigen::MatrixXd zero_modes;      ///< orthonormal columns in the sector basis
        std::optional<double> gap;       ///< lowest eigenvalue above the zero threshold
        std::optional<double> min_eigenvalue;
        bool dense = true;
    };

    /// Zero modes and lowest excitation of H_int in an (N, L) sector basis.
    inline SectorSpectrum sector_spectrum(const FockBasis& basis, double V0, const SpectrumOptions& opt = {})
    {
        SectorSpectrum out;
        if (basis.sector())
        {
            out.N = basis.sector()->first;
            out.L = basis.sector()->second;
        }
        out.dimension = basis.dimension();
        out.zero_modes = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(basis.dimension()), 0);
        if (basis.dimension() == 0)
            return out;
        const auto H = build_hint(basis, V0, opt.jobs);
        const double threshold = opt.zero_tol * std::abs(V0);
        if (basis.dimension() < opt.dense_limit)
        {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H.dense());
            if (es.info() != Eigen::Success)
                throw std::runtime_error("sector_spectrum: dense diagonalization failed");
            const auto& ev = es.eigenvalues();
            out.min_eigenvalue = ev(0);
            int zeros = 0;
            while (zeros < ev.size() && ev(zeros) <= threshold)
                ++zeros;
            out.zero_modes = es.eigenvectors().leftCols(zeros);
            if (zeros < ev.size())
                out.gap = ev(zeros);
            return out;
        }
        out.dense = false;
        const auto dim = static_cast<Eigen::Index>(basis.dimension());
        RealApply apply = [&H](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y = H.apply(x); };
        Eigen::MatrixXd found(dim, 0);
        while (found.cols() < dim)
        {
            auto pair = lanczos_lowest(apply, dim, found, opt.lanczos);
            if (!out.min_eigenvalue)
                out.min_eigenvalue = pair.value;
            if (pair.value > threshold)
            {
                out.gap = pair.value;
                break;
            }
            Eigen::VectorXd v = pair.vector;
            v -= found * (found.transpose() * v);
            v.normalize();
            found.conservativeResize(dim, found.cols() + 1);
            found.col(found.cols() - 1) = v;
        }
        out.zero_modes = found;
        return out;
    }

    /// LLL sector basis for (N, L) with orbitals l <= 3 m_max.
    inline FockBasis lll_sector_basis(int N, int L, std::optional<int> m_max = std::nullopt)
    {
        return FockBasis::sector(lll_modes(m_max.value_or(default_m_max(N))), N, L);
    }

    inline SectorSpectrum zero_energy_subspace(int N, int L, double V0 = 1.0, const SpectrumOptions& opt = {},
                                               std::optional<int> m_max = std::nullopt)
    {
        return sector_spectrum(lll_sector_basis(N, L, m_max), V0, opt);
    }

    /// |overlap| of a state with the span of the zero modes of a sector.
    inline double projection_onto(const SectorSpectrum& spec, const FockBasis& basis, const SymmetricState& state)
    {
        const Eigen::VectorXd v = state.embed(basis);
        return (spec.zero_modes.transpose() * v).norm() / v.norm();
    }

    /// Omega^(N) / Omega_p = <LN, N+1| a_0^dagger |2qh, N>.
    inline double pump_overlap(int N)
    {
        if (N < 0)
            throw std::invalid_argument("pump_overlap: N must be nonnegative");
        const auto qh = quasihole_state(N, 2);
        const auto ln = laughlin_state(N + 1);
        double s = 0.0;
        for (const auto& [state, amp] : qh.amplitudes)
        {
            FockState raised = state;
            const int n0 = raised[0];
            raised[0] = n0 + 1;
            auto it = ln.amplitudes.find(raised);
            if (it != ln.amplitudes.end())
                s += it->second * amp * std::sqrt(n0 + 1.0);
        }
        return s;
    }

    /// Many-body gap in the Laughlin sector L = 3N(N-1); absent when the sector has no excitation.
    inline std::optional<double> many_body_gap(int N, double V0 = 1.0, const SpectrumOptions& opt = {},
                                               std::optional<int> m_max = std::nullopt)
    {
        if (N < 1)
            throw std::invalid_argument("many_body_gap: N must be >= 1");
        return zero_energy_subspace(N, 3 * N * (N - 1), V0, opt, m_max).gap;
    }
} // namespace fluxgrow
