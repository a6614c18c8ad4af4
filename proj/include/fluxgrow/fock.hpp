#pragma once

// Bosonic occupation-number bases and real sparse operators on them.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "numeric.hpp"

namespace fluxgrow
{
    /// Occupations keyed by angular momentum l; zero occupations are never stored.
    using FockState = std::map<int, int>;

    inline int photon_number(const FockState& s)
    {
        int n = 0;
        for (const auto& [l, k] : s)
            n += k;
        return n;
    }

    inline int angular_momentum(const FockState& s)
    {
        int L = 0;
        for (const auto& [l, k] : s)
            L += l * k;
        return L;
    }

    inline std::string to_string(const FockState& s)
    {
        std::string out = "|";
        bool first = true;
        for (const auto& [l, k] : s)
        {
            if (!first)
                out += ' ';
            out += std::to_string(l) + ":" + std::to_string(k);
            first = false;
        }
        return out + ">";
    }

    class FockBasis
    {
    public:
        using Occupation = std::vector<std::uint8_t>;

        /// All states with total photon number in [n_min, n_max] (and total L if given).
        FockBasis(std::vector<int> modes, int n_min, int n_max, std::optional<int> total_l = std::nullopt,
                  std::size_t size_cap = 200'000)
            : m_modes(std::move(modes))
        {
            if (n_min < 0 || n_max < n_min)
                throw std::invalid_argument("FockBasis: need 0 <= n_min <= n_max");
            if (n_max > 255)
                throw std::invalid_argument("FockBasis: photon number too large");
            std::sort(m_modes.begin(), m_modes.end());
            if (std::adjacent_find(m_modes.begin(), m_modes.end()) != m_modes.end())
                throw std::invalid_argument("FockBasis: duplicate modes");
            for (int l : m_modes)
                if (l < 0)
                    throw std::invalid_argument("FockBasis: negative mode " + std::to_string(l));
            if (n_min == n_max && total_l)
                m_sector = std::pair{n_min, *total_l};

            Occupation cur(m_modes.size(), 0);
            enumerate(0, n_max, 0, 0, n_min, total_l, size_cap, cur);
            std::sort(m_states.begin(), m_states.end(), [](const Occupation& x, const Occupation& y) {
                const int nx = total(x), ny = total(y);
                return nx != ny ? nx < ny : x > y;
            });
            for (std::size_t i = 0; i < m_states.size(); ++i)
                m_index.emplace(m_states[i], i);
        }

        /// Fixed (N, L) sector.
        static FockBasis sector(std::vector<int> modes, int N, int L, std::size_t size_cap = 200'000)
        {
            return FockBasis(std::move(modes), N, N, L, size_cap);
        }

        const std::vector<int>& modes() const { return m_modes; }
        std::size_t dimension() const { return m_states.size(); }
        const std::optional<std::pair<int, int>>& sector() const { return m_sector; }
        const Occupation& occupation(std::size_t i) const { return m_states.at(i); }

        std::optional<std::size_t> position(int l) const
        {
            auto it = std::lower_bound(m_modes.begin(), m_modes.end(), l);
            if (it == m_modes.end() || *it != l)
                return std::nullopt;
            return static_cast<std::size_t>(it - m_modes.begin());
        }

        std::size_t require_position(int l) const
        {
            auto p = position(l);
            if (!p)
                throw std::out_of_range("FockBasis: mode l=" + std::to_string(l) + " is not in the basis");
            return *p;
        }

        std::optional<std::size_t> find(const Occupation& occ) const
        {
            auto it = m_index.find(occ);
            if (it == m_index.end())
                return std::nullopt;
            return it->second;
        }

        std::optional<std::size_t> find(const FockState& s) const
        {
            Occupation occ(m_modes.size(), 0);
            for (const auto& [l, k] : s)
            {
                if (k == 0)
                    continue;
                auto p = position(l);
                if (!p || k > 255)
                    return std::nullopt;
                occ[*p] = static_cast<std::uint8_t>(k);
            }
            return find(occ);
        }

        FockState state(std::size_t i) const
        {
            FockState s;
            const auto& occ = m_states.at(i);
            for (std::size_t k = 0; k < occ.size(); ++k)
                if (occ[k])
                    s[m_modes[k]] = occ[k];
            return s;
        }

        int photon_number(std::size_t i) const { return total(m_states.at(i)); }

        int angular_momentum(std::size_t i) const
        {
            int L = 0;
            const auto& occ = m_states.at(i);
            for (std::size_t k = 0; k < occ.size(); ++k)
                L += m_modes[k] * occ[k];
            return L;
        }

    private:
        static int total(const Occupation& o)
        {
            int n = 0;
            for (auto k : o)
                n += k;
            return n;
        }

        void enumerate(std::size_t k, int remaining, int used, int l_sum, int n_min, const std::optional<int>& total_l,
                       std::size_t cap, Occupation& cur)
        {
            if (total_l && l_sum > *total_l)
                return;
            if (k == m_modes.size())
            {
                if (used >= n_min && (!total_l || l_sum == *total_l))
                {
                    if (m_states.size() >= cap)
                        throw std::length_error("FockBasis: dimension exceeds the cap of " + std::to_string(cap));
                    m_states.push_back(cur);
                }
                return;
            }
            for (int n = 0; n <= remaining; ++n)
            {
                cur[k] = static_cast<std::uint8_t>(n);
                enumerate(k + 1, remaining - n, used + n, l_sum + n * m_modes[k], n_min, total_l, cap, cur);
            }
            cur[k] = 0;
        }

        std::vector<int> m_modes;
        std::vector<Occupation> m_states;
        std::map<Occupation, std::size_t> m_index;
        std::optional<std::pair<int, int>> m_sector;
    };

    /// Real sparse operator on a Fock basis (all operators used here have real matrix elements).
    class SparseOperator
    {
    public:
        using Matrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

        SparseOperator() = default;
        explicit SparseOperator(Matrix m) : m_matrix(std::move(m))
        {
            if (m_matrix.rows() != m_matrix.cols())
                throw std::invalid_argument("SparseOperator: matrix must be square");
            m_matrix.makeCompressed();
        }

        static SparseOperator from_triplets(std::size_t dim, const std::vector<Eigen::Triplet<double>>& triplets)
        {
            Matrix m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
            m.setFromTriplets(triplets.begin(), triplets.end());
            m.prune(0.0);
            return SparseOperator(std::move(m));
        }

        static SparseOperator diagonal(const std::vector<double>& d)
        {
            std::vector<Eigen::Triplet<double>> t;
            for (std::size_t i = 0; i < d.size(); ++i)
                if (d[i] != 0.0)
                    t.emplace_back(static_cast<int>(i), static_cast<int>(i), d[i]);
            return from_triplets(d.size(), t);
        }

        std::size_t dimension() const { return static_cast<std::size_t>(m_matrix.rows()); }
        const Matrix& matrix() const { return m_matrix; }
        Eigen::MatrixXd dense() const { return Eigen::MatrixXd(m_matrix); }
        double coeff(std::size_t i, std::size_t j) const
        {
            return m_matrix.coeff(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }

        /// out += scale * (this * v)
        template <typename Scalar>
        void apply_add(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& v, Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& out,
                       Scalar scale) const
        {
            for (Eigen::Index r = 0; r < m_matrix.outerSize(); ++r)
            {
                Scalar acc(0);
                for (Matrix::InnerIterator it(m_matrix, r); it; ++it)
                    acc += it.value() * v(it.col());
                out(r) += scale * acc;
            }
        }

        Eigen::VectorXcd apply(const Eigen::VectorXcd& v) const
        {
            Eigen::VectorXcd out = Eigen::VectorXcd::Zero(v.size());
            apply_add(v, out, cplx_one());
            return out;
        }

        Eigen::VectorXd apply(const Eigen::VectorXd& v) const { return m_matrix * v; }

        double expectation(const Eigen::VectorXcd& v) const { return v.dot(apply(v)).real(); }

        /// max |A_ij - A_ji|
        double max_asymmetry() const
        {
            Matrix t = m_matrix.transpose();
            Matrix d = m_matrix - t;
            double worst = 0.0;
            for (Eigen::Index r = 0; r < d.outerSize(); ++r)
                for (Matrix::InnerIterator it(d, r); it; ++it)
                    worst = std::max(worst, std::abs(it.value()));
            return worst;
        }

        SparseOperator operator+(const SparseOperator& o) const { return SparseOperator(Matrix(m_matrix + o.m_matrix)); }
        SparseOperator operator*(double s) const { return SparseOperator(Matrix(m_matrix * s)); }

    private:
        static std::complex<double> cplx_one() { return {1.0, 0.0}; }
        Matrix m_matrix;
    };

    /// max |[A, B]_ij|
    inline double commutator_max(const SparseOperator& a, const SparseOperator& b)
    {
        if (a.dimension() != b.dimension())
            throw std::invalid_argument("commutator_max: dimension mismatch");
        SparseOperator::Matrix c = a.matrix() * b.matrix() - b.matrix() * a.matrix();
        double worst = 0.0;
        for (Eigen::Index r = 0; r < c.outerSize(); ++r)
            for (SparseOperator::Matrix::InnerIterator it(c, r); it; ++it)
                worst = std::max(worst, std::abs(it.value()));
        return worst;
    }

    inline SparseOperator number_operator(const FockBasis& basis)
    {
        std::vector<double> d(basis.dimension());
        for (std::size_t i = 0; i < d.size(); ++i)
            d[i] = basis.photon_number(i);
        return SparseOperator::diagonal(d);
    }

    inline SparseOperator total_angular_momentum(const FockBasis& basis)
    {
        std::vector<double> d(basis.dimension());
        for (std::size_t i = 0; i < d.size(); ++i)
            d[i] = basis.angular_momentum(i);
        return SparseOperator::diagonal(d);
    }

    /// Number of photons in modes with l mod 3 == alpha.
    inline SparseOperator manifold_number(const FockBasis& basis, int alpha)
    {
        std::vector<double> d(basis.dimension(), 0.0);
        const auto& modes = basis.modes();
        for (std::size_t i = 0; i < d.size(); ++i)
        {
            const auto& occ = basis.occupation(i);
            for (std::size_t k = 0; k < modes.size(); ++k)
                if (modes[k] % 3 == alpha)
                    d[i] += occ[k];
        }
        return SparseOperator::diagonal(d);
    }

    /// a_{l_create}^dagger a_{l_annihilate}
    inline SparseOperator hopping(const FockBasis& basis, int l_create, int l_annihilate)
    {
        const auto pc = basis.require_position(l_create);
        const auto pa = basis.require_position(l_annihilate);
        std::vector<Eigen::Triplet<double>> t;
        for (std::size_t j = 0; j < basis.dimension(); ++j)
        {
            auto occ = basis.occupation(j);
            if (occ[pa] == 0)
                continue;
            double amp = std::sqrt(static_cast<double>(occ[pa]));
            --occ[pa];
            amp *= std::sqrt(static_cast<double>(occ[pc]) + 1.0);
            ++occ[pc];
            if (auto i = basis.find(occ))
                t.emplace_back(static_cast<int>(*i), static_cast<int>(j), amp);
        }
        return SparseOperator::from_triplets(basis.dimension(), t);
    }

    /// a_l^dagger; states pushed beyond the basis truncation are dropped.
    inline SparseOperator creation(const FockBasis& basis, int l)
    {
        const auto p = basis.require_position(l);
        std::vector<Eigen::Triplet<double>> t;
        for (std::size_t j = 0; j < basis.dimension(); ++j)
        {
            auto occ = basis.occupation(j);
            if (occ[p] == 255)
                continue;
            const double amp = std::sqrt(static_cast<double>(occ[p]) + 1.0);
            ++occ[p];
            if (auto i = basis.find(occ))
                t.emplace_back(static_cast<int>(*i), static_cast<int>(j), amp);
        }
        return SparseOperator::from_triplets(basis.dimension(), t);
    }

    inline SparseOperator transpose(const SparseOperator& op)
    {
        return SparseOperator(SparseOperator::Matrix(op.matrix().transpose()));
    }
} // namespace fluxgrow
