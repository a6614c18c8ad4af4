#pragma once

// Lanczos kernels for real symmetric operators given only through their
// action on vectors: exp(-i h H) v and extremal eigenpairs.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fluxgrow
{
    using ComplexApply = std::function<void(const Eigen::VectorXcd&, Eigen::VectorXcd&)>;
    using RealApply = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>;

    struct KrylovOptions
    {
        double tol = 1e-9; ///< a-posteriori error bound per call, relative to ||v||
        int max_dimension = 40;
        int check_every = 4;
    };

    struct KrylovStats
    {
        long calls = 0;
        long matvecs = 0;
        long substeps = 0;
        double max_error_estimate = 0.0;
    };

    namespace detail
    {
        /// Symmetric tridiagonal matrix from Lanczos coefficients.
        inline Eigen::MatrixXd tridiagonal(const std::vector<double>& alpha, const std::vector<double>& beta, int k)
        {
            Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k, k);
            for (int i = 0; i < k; ++i)
            {
                t(i, i) = alpha[i];
                if (i + 1 < k)
                    t(i, i + 1) = t(i + 1, i) = beta[i];
            }
            return t;
        }

        /// Lanczos step with full reorthogonalization; returns the new off-diagonal beta.
        template <typename Vec>
        double lanczos_extend(std::vector<Vec>& q, std::vector<double>& alpha, Vec& w)
        {
            const std::size_t j = q.size() - 1;
            alpha.push_back(std::real(q[j].dot(w)));
            for (int pass = 0; pass < 2; ++pass)
                for (std::size_t i = 0; i <= j; ++i)
                    w -= q[i].dot(w) * q[i];
            return w.norm();
        }

        /// One Lanczos pass. Returns true and writes `out` if the estimate met the tolerance.
        inline bool lanczos_expm_pass(const ComplexApply& apply, const Eigen::VectorXcd& v, double h,
                                      const KrylovOptions& opt, Eigen::VectorXcd& out, KrylovStats& stats,
                                      double& err_out)
        {
            const double beta0 = v.norm();
            if (beta0 == 0.0)
            {
                out = v;
                err_out = 0.0;
                return true;
            }
            const auto n = v.size();
            const int kmax = static_cast<int>(std::min<Eigen::Index>(opt.max_dimension, n));
            std::vector<Eigen::VectorXcd> q{v / beta0};
            std::vector<double> alpha, beta;
            Eigen::VectorXcd w(n);
            for (int k = 1; k <= kmax; ++k)
            {
                w.setZero();
                apply(q.back(), w);
                ++stats.matvecs;
                const double b = lanczos_extend(q, alpha, w);
                const bool breakdown = b <= 1e-13 * std::max(1.0, std::abs(alpha.back()));
                if (breakdown || k == kmax || k % opt.check_every == 0)
                {
                    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tridiagonal(alpha, beta, k));
                    const Eigen::VectorXcd phase =
                        (es.eigenvalues().cast<std::complex<double>>() * std::complex<double>(0.0, -h)).array().exp();
                    const Eigen::VectorXcd coeffs =
                        es.eigenvectors().cast<std::complex<double>>() *
                        phase.cwiseProduct(es.eigenvectors().row(0).transpose().cast<std::complex<double>>());
                    const double err = breakdown ? 0.0 : beta0 * b * std::abs(coeffs(k - 1));
                    if (breakdown || err <= opt.tol * beta0)
                    {
                        out = Eigen::VectorXcd::Zero(n);
                        for (int i = 0; i < k; ++i)
                            out += coeffs(i) * q[i];
                        out *= beta0;
                        err_out = err;
                        return true;
                    }
                    if (k == kmax)
                        return false;
                }
                beta.push_back(b);
                q.push_back(w / b);
            }
            return false;
        }
    } // namespace detail

    /// exp(-i h H) v with automatic substepping when the Krylov space does not converge.
    inline Eigen::VectorXcd lanczos_expm(const ComplexApply& apply, const Eigen::VectorXcd& v, double h,
                                         const KrylovOptions& opt = {}, KrylovStats* stats = nullptr)
    {
        KrylovStats local;
        KrylovStats& st = stats ? *stats : local;
        ++st.calls;
        Eigen::VectorXcd cur = v;
        double remaining = h;
        double step = h;
        int halvings = 0;
        while (remaining != 0.0)
        {
            if (std::abs(step) > std::abs(remaining))
                step = remaining;
            Eigen::VectorXcd next;
            double err = 0.0;
            if (detail::lanczos_expm_pass(apply, cur, step, opt, next, st, err))
            {
                cur = std::move(next);
                remaining -= step;
                if (std::abs(remaining) < 1e-15 * std::abs(h))
                    remaining = 0.0;
                ++st.substeps;
                st.max_error_estimate = std::max(st.max_error_estimate, err);
            }
            else
            {
                step *= 0.5;
                if (++halvings > 60)
                    throw std::runtime_error("lanczos_expm: no convergence even for tiny substeps");
            }
        }
        return cur;
    }

    struct EigenPair
    {
        double value = 0.0;
        Eigen::VectorXd vector;
        int iterations = 0;
    };

    struct LanczosEigenOptions
    {
        int max_iterations = 2000;
        int restart_length = 80;
        double tol = 1e-10; ///< residual norm ||H x - lambda x|| relative to max(1, |lambda|)
        unsigned seed = 12345;
    };

    /// Lowest eigenpair of H restricted to the orthogonal complement of the orthonormal
    /// columns of `deflate`. Thick restart from the best Ritz vector.
    inline EigenPair lanczos_lowest(const RealApply& apply, Eigen::Index dim, const Eigen::MatrixXd& deflate,
                                    const LanczosEigenOptions& opt = {})
    {
        if (dim <= 0)
            throw std::invalid_argument("lanczos_lowest: empty space");
        if (deflate.cols() >= dim)
            throw std::invalid_argument("lanczos_lowest: deflation space fills the whole space");
        auto project = [&](Eigen::VectorXd& x) {
            if (deflate.cols() > 0)
                x -= deflate * (deflate.transpose() * x);
        };
        auto apply_projected = [&](const Eigen::VectorXd& x, Eigen::VectorXd& out) {
            out.setZero();
            apply(x, out);
            project(out);
        };

        // A start vector shared across deflation steps would have no weight left in a degenerate eigenspace.
        std::mt19937 rng(opt.seed + 7919u * static_cast<unsigned>(deflate.cols()));
        std::normal_distribution<double> normal;
        Eigen::VectorXd start(dim);
        for (Eigen::Index i = 0; i < dim; ++i)
            start(i) = normal(rng);
        project(start);
        start.normalize();

        const int block = static_cast<int>(std::min<Eigen::Index>(opt.restart_length, dim - deflate.cols()));
        int total = 0;
        while (total < opt.max_iterations)
        {
            std::vector<Eigen::VectorXd> q{start};
            std::vector<double> alpha, beta;
            Eigen::VectorXd w(dim);
            int k = 0;
            while (k < block)
            {
                apply_projected(q.back(), w);
                ++total;
                const double scale = w.norm();
                detail::lanczos_extend(q, alpha, w);
                project(w);
                const double b = w.norm();
                ++k;
                if (b <= 1e-10 * std::max(scale, 1e-300) || k == block)
                    break;
                beta.push_back(b);
                q.push_back(w / b);
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(detail::tridiagonal(alpha, beta, k));
            Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
            for (int i = 0; i < k; ++i)
                x += es.eigenvectors()(i, 0) * q[i];
            project(x);
            x.normalize();
            Eigen::VectorXd hx(dim);
            apply_projected(x, hx);
            const double lambda = x.dot(hx);
            const double residual = (hx - lambda * x).norm();
            if (residual <= opt.tol * std::max(1.0, std::abs(lambda)))
                return {lambda, x, total};
            start = x;
        }
        throw std::runtime_error("lanczos_lowest: no convergence after " + std::to_string(total) + " iterations");
    }
} // namespace fluxgrow
