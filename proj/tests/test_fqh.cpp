#include <cmath>
#include <complex>
#include <random>
#include <iostream>
#include <sstream>

#include <gtest/gtest.h>

#include "fluxgrow/fqh.hpp"

using namespace fluxgrow;

namespace
{
    // Second-quantization oracle: applies a+_{l1} a+_{l2} a_{l3} a_{l4} to explicit kets.
    Eigen::MatrixXd brute_force_hint(const FockBasis& basis, double V0)
    {
        const auto& modes = basis.modes();
        const auto n = static_cast<Eigen::Index>(basis.dimension());
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
        auto act = [](FockState s, int l, int delta, double& amp) {
            const int k = s.count(l) ? s[l] : 0;
            if (delta < 0)
            {
                if (k == 0)
                {
                    amp = 0.0;
                    return s;
                }
                amp *= std::sqrt(static_cast<double>(k));
            }
            else
                amp *= std::sqrt(k + 1.0);
            if (k + delta == 0)
                s.erase(l);
            else
                s[l] = k + delta;
            return s;
        };
        for (Eigen::Index j = 0; j < n; ++j)
            for (int l1 : modes)
                for (int l2 : modes)
                    for (int l3 : modes)
                        for (int l4 : modes)
                        {
                            const double v = interaction_element(l1, l2, l3, l4, V0);
                            if (v == 0.0)
                                continue;
                            double amp = 1.0;
                            auto s = act(basis.state(static_cast<std::size_t>(j)), l4, -1, amp);
                            if (amp == 0.0)
                                continue;
                            s = act(s, l3, -1, amp);
                            if (amp == 0.0)
                                continue;
                            s = act(s, l2, +1, amp);
                            s = act(s, l1, +1, amp);
                            if (auto i = basis.find(s))
                                h(static_cast<Eigen::Index>(*i), j) += v * amp;
                        }
        return h;
    }

    using Poly = std::map<std::vector<int>, double>;

    // prod_k w_k^m prod_{i<j} (w_i - w_j)^2 over `vars` coordinates, without symmetrization shortcuts.
    Poly jastrow(int vars, int m)
    {
        Poly p{{std::vector<int>(vars, m), 1.0}};
        for (int i = 0; i < vars; ++i)
            for (int j = i + 1; j < vars; ++j)
            {
                Poly next;
                for (const auto& [e, c] : p)
                {
                    auto a = e, b = e, d = e;
                    a[i] += 2;
                    b[i] += 1;
                    b[j] += 1;
                    d[j] += 2;
                    next[a] += c;
                    next[b] -= 2.0 * c;
                    next[d] += c;
                }
                p.clear();
                for (const auto& [e, c] : next)
                    if (c != 0.0)
                        p.emplace(e, c);
            }
        return p;
    }

    // int |z|^{6k} e^{-2|z|^2} d^2z = pi (3k)! / 2^{3k+1}
    double moment(int k) { return pi * std::tgamma(3.0 * k + 1.0) / std::pow(2.0, 3 * k + 1); }

    double inner(const Poly& a, const Poly& b)
    {
        double s = 0.0;
        for (const auto& [e, c] : a)
        {
            auto it = b.find(e);
            if (it == b.end())
                continue;
            double w = c * it->second;
            for (int k : e)
                w *= moment(k);
            s += w;
        }
        return s;
    }

    // First-quantized <LN, N+1| a_0^dagger |2qh, N> with the a_0^dagger photon on coordinate 0.
    double pump_overlap_first_quantized(int N)
    {
        const Poly ln = jastrow(N + 1, 0);
        Poly product;
        for (const auto& [e, c] : jastrow(N, 2))
        {
            std::vector<int> shifted{0};
            shifted.insert(shifted.end(), e.begin(), e.end());
            product[shifted] = c;
        }
        const double qh_norm = N == 0 ? 1.0 : inner(jastrow(N, 2), jastrow(N, 2));
        return std::sqrt(N + 1.0) * inner(ln, product) / std::sqrt(inner(ln, ln) * qh_norm * moment(0));
    }

    std::complex<double> eval(const Poly& p, const std::vector<std::complex<double>>& w, std::size_t offset)
    {
        std::complex<double> s = 0.0;
        for (const auto& [e, c] : p)
        {
            std::complex<double> t = c;
            for (std::size_t k = 0; k < e.size(); ++k)
                t *= std::pow(w[offset + k], e[k]);
            s += t;
        }
        return s;
    }
} // namespace

TEST(HaldaneV0, Examples)
{
    EXPECT_NEAR(haldane_v0(8.0 / 3.0, 1.0, 1.0), 1.0, 1e-15);
    EXPECT_NEAR(haldane_v0(1.0, 1.0, 2.0) / haldane_v0(1.0, 1.0, 1.0), 1.0 / 16.0, 1e-15);
    EXPECT_NEAR(haldane_v0(1.0, 2.0, 1.0) / haldane_v0(1.0, 1.0, 1.0), 0.25, 1e-15);
    EXPECT_THROW(haldane_v0(0.0, 1.0, 1.0), std::invalid_argument);
    EXPECT_TRUE((InteractionParams{1.0, 0.1, 1.0}.regime_ok()));
    EXPECT_FALSE((InteractionParams{1.0, 2.0, 1.0}.regime_ok()));
}

TEST(InteractionElement, Examples)
{
    EXPECT_NEAR(interaction_element(0, 0, 0, 0, 1.0), 0.5, 1e-15);
    EXPECT_NEAR(interaction_element(0, 3, 1, 2, 1.0), 0.5 * 6.0 * std::sqrt(std::pow(2.0, -6) / 12.0), 1e-15);
    EXPECT_NEAR(interaction_element(3, 3, 0, 6, 2.0), 720.0 * std::sqrt(std::pow(2.0, -12) / (36.0 * 720.0)), 1e-13);
    EXPECT_EQ(interaction_element(0, 3, 0, 6, 1.0), 0.0);
    EXPECT_THROW(interaction_element(-1, 1, 0, 0, 1.0), std::domain_error);
}

TEST(BuildHint, MatchesBruteForce)
{
    for (const auto& basis : {lll_sector_basis(2, 6), lll_sector_basis(3, 18), FockBasis({0, 3, 6, 9}, 0, 3),
                              FockBasis({0, 1, 3, 4, 6}, 1, 3)})
    {
        const Eigen::MatrixXd got = build_hint(basis, 1.3, 2).dense();
        EXPECT_LT((got - brute_force_hint(basis, 1.3)).cwiseAbs().maxCoeff(), 1e-13) << basis.dimension();
    }
}

TEST(BuildHint, TwoPhotonEntry)
{
    const auto basis = FockBasis::sector({0, 3, 6}, 2, 6);
    const auto h = build_hint(basis, 1.0);
    const auto i = *basis.find(FockState{{0, 1}, {6, 1}});
    const auto j = *basis.find(FockState{{3, 2}});
    // Two orderings of (l1, l2) and (l3, l4), bosonic factor sqrt(2) from |3:2>.
    EXPECT_NEAR(h.coeff(i, j), 4.0 * interaction_element(0, 6, 3, 3, 1.0) / std::sqrt(2.0), 1e-15);
}

TEST(BuildHint, SinglePhotonSectorIsZero)
{
    const auto h = build_hint(FockBasis({0, 3, 6, 9}, 1, 1), 1.0);
    EXPECT_EQ(h.matrix().nonZeros(), 0);
}

TEST(BuildHint, ConservationAndPositivity)
{
    const FockBasis mixed({0, 3, 6, 9, 12}, 0, 4);
    const auto h = build_hint(mixed, 1.0);
    EXPECT_LE(commutator_max(h, total_angular_momentum(mixed)), 1e-12);
    EXPECT_LE(commutator_max(h, number_operator(mixed)), 1e-12);
    EXPECT_LE(h.max_asymmetry(), 1e-12);
    for (auto [N, L] : {std::pair{2, 0}, {2, 6}, {2, 12}, {3, 9}, {3, 18}, {3, 27}, {4, 36}})
    {
        const auto spec = zero_energy_subspace(N, L);
        ASSERT_TRUE(spec.min_eigenvalue.has_value());
        EXPECT_GE(*spec.min_eigenvalue, -1e-10) << N << "," << L;
    }
}

TEST(Laughlin, SmallStates)
{
    const auto one = laughlin_state(1);
    ASSERT_EQ(one.amplitudes.size(), 1u);
    EXPECT_NEAR(one.amplitudes.at(FockState{{0, 1}}), 1.0, 1e-15);
    const auto two = laughlin_state(2);
    for (const auto& [s, amp] : two.amplitudes)
    {
        EXPECT_EQ(angular_momentum(s), 6);
        for (const auto& [l, k] : s)
            EXPECT_TRUE(l == 0 || l == 3 || l == 6);
    }
    EXPECT_NEAR(two.norm(), 1.0, 1e-15);
}

TEST(Laughlin, UniqueZeroModeMatchesExpansion)
{
    for (int N : {2, 3})
    {
        const int L = 3 * N * (N - 1);
        const auto basis = lll_sector_basis(N, L);
        const auto spec = sector_spectrum(basis, 1.0);
        ASSERT_EQ(spec.zero_modes.cols(), 1) << N;
        const double ov = std::abs(spec.zero_modes.col(0).dot(laughlin_state(N).embed(basis)));
        EXPECT_GE(ov, 1.0 - 1e-10);
        EXPECT_NEAR(angular_momentum_expectation(laughlin_state(N)), L, 1e-12);
    }
}

TEST(Laughlin, AnnihilatedByInteraction)
{
    for (int N = 1; N <= 4; ++N)
    {
        const auto state = laughlin_state(N);
        const FockBasis basis(lll_modes(2 * (N - 1)), N, N);
        const Eigen::VectorXd v = state.embed(basis);
        EXPECT_LE(build_hint(basis, 1.0).apply(v).norm(), 1e-10) << N;
        EXPECT_LE(state.max_mode(), 6 * (N - 1));
    }
}

TEST(Quasihole, AngularMomentumAndSupport)
{
    const auto single = quasihole_state(1, 2);
    ASSERT_EQ(single.amplitudes.size(), 1u);
    EXPECT_EQ(single.amplitudes.begin()->first, (FockState{{6, 1}}));
    for (int N = 1; N <= 3; ++N)
        for (int m = 0; m <= 2; ++m)
        {
            const auto state = quasihole_state(N, m);
            const int L = quasihole_angular_momentum(N, m);
            for (const auto& [s, amp] : state.amplitudes)
                EXPECT_EQ(angular_momentum(s), L);
            EXPECT_GE(state.min_mode(), 3 * m);
            EXPECT_LE(state.max_mode(), 3 * m + 6 * (N - 1));
            const FockBasis basis(lll_modes(m + 2 * (N - 1)), N, N);
            EXPECT_LE(build_hint(basis, 1.0).apply(state.embed(basis)).norm(), 1e-10);
        }
    for (int N = 1; N <= 3; ++N)
        EXPECT_EQ(quasihole_angular_momentum(N, 2), 3 * N * (N + 1));
}

TEST(Quasihole, LiesInZeroEnergySectors)
{
    const auto b12 = lll_sector_basis(2, 12);
    const auto s12 = sector_spectrum(b12, 1.0);
    EXPECT_EQ(s12.zero_modes.cols(), 2);
    EXPECT_NEAR(projection_onto(s12, b12, quasihole_state(2, 1)), 1.0, 1e-10);
    const auto b18 = lll_sector_basis(2, 18);
    EXPECT_NEAR(projection_onto(sector_spectrum(b18, 1.0), b18, quasihole_state(2, 2)), 1.0, 1e-10);
    const auto b36 = lll_sector_basis(3, 36);
    EXPECT_NEAR(projection_onto(sector_spectrum(b36, 1.0), b36, quasihole_state(3, 2)), 1.0, 1e-10);
}

TEST(ZeroEnergySubspace, TwoPhotonsAtZeroMomentum)
{
    const auto spec = zero_energy_subspace(2, 0);
    EXPECT_EQ(spec.dimension, 1u);
    EXPECT_EQ(spec.zero_modes.cols(), 0);
    ASSERT_TRUE(spec.gap.has_value());
    const auto basis = lll_sector_basis(2, 0);
    EXPECT_NEAR(*spec.gap, brute_force_hint(basis, 1.0)(0, 0), 1e-15);
    EXPECT_NEAR(*spec.gap, 1.0, 1e-15);
}

TEST(ZeroEnergySubspace, IterativePathMatchesDense)
{
    SpectrumOptions sparse;
    sparse.dense_limit = 1;
    for (auto [N, L] : {std::pair{3, 18}, {3, 27}, {4, 36}})
    {
        const auto dense = zero_energy_subspace(N, L);
        const auto iter = zero_energy_subspace(N, L, 1.0, sparse);
        EXPECT_FALSE(iter.dense);
        EXPECT_EQ(iter.zero_modes.cols(), dense.zero_modes.cols());
        ASSERT_TRUE(iter.gap && dense.gap);
        EXPECT_NEAR(*iter.gap, *dense.gap, 1e-8);
        const Eigen::MatrixXd p = dense.zero_modes.transpose() * iter.zero_modes;
        EXPECT_NEAR(p.squaredNorm(), static_cast<double>(dense.zero_modes.cols()), 1e-8);
    }
}

TEST(ManyBodyGap, ValuesAndScaling)
{
    EXPECT_FALSE(many_body_gap(1).has_value());
    const auto g2 = many_body_gap(2);
    const auto g3 = many_body_gap(3);
    ASSERT_TRUE(g2 && g3);
    // The 2x2 sector {|0:1 6:1>, |3:2>} has eigenvalues 0 and 11/32.
    EXPECT_NEAR(*g2, 11.0 / 32.0, 1e-12);
    EXPECT_GT(*g3, 0.1);
    EXPECT_LT(*g3, 0.5);
    EXPECT_LT(std::abs(*g2 - *g3) / *g2, 0.5);
    EXPECT_NEAR(*many_body_gap(2, 3.0), 3.0 * *g2, 1e-12);
    EXPECT_THROW(many_body_gap(0), std::invalid_argument);
}

TEST(PumpOverlap, PrintedAndTrivialValues)
{
    EXPECT_NEAR(pump_overlap(0), 1.0, 1e-15);
    EXPECT_NEAR(pump_overlap(1), std::sqrt(10.0 / 11.0), 1e-9);
    EXPECT_THROW(pump_overlap(-1), std::invalid_argument);
}

TEST(PumpOverlap, MatchesFirstQuantizedIntegral)
{
    for (int N = 0; N <= 3; ++N)
        EXPECT_NEAR(std::abs(pump_overlap(N)), std::abs(pump_overlap_first_quantized(N)), 1e-12) << N;
}

TEST(PumpOverlap, MonteCarloEstimate)
{
    // Importance sampling: each coordinate is drawn from an equal mixture of the radial shells
    // |z|^{2p} e^{-2|z|^2}, p = 0, 3, ..., 6N, which covers every monomial degree in the integrands.
    const int N = 2;
    const Poly ln = jastrow(N + 1, 0);
    const Poly qh = jastrow(N, 2);
    std::vector<int> shells;
    for (int p = 0; p <= 6 * N; p += 3)
        shells.push_back(p);
    std::mt19937_64 rng(20240601);
    std::uniform_int_distribution<std::size_t> pick(0, shells.size() - 1);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * pi);
    auto shell_density = [&](double u) {
        double q = 0.0;
        for (int p : shells)
            q += std::exp(p * std::log(u) - 2.0 * u - std::log(pi) - std::lgamma(p + 1.0) + (p + 1) * std::log(2.0));
        return q / shells.size();
    };
    const int samples = 200000;
    double cross = 0.0, cross2 = 0.0, n_ln = 0.0, n_qh = 0.0;
    std::vector<std::complex<double>> w(N + 1);
    for (int s = 0; s < samples; ++s)
    {
        double weight = 1.0;
        for (auto& x : w)
        {
            std::gamma_distribution<double> radial(shells[pick(rng)] + 1.0, 0.5);
            const double u = radial(rng);
            weight *= std::exp(-2.0 * u) / shell_density(u);
            x = std::pow(std::polar(std::sqrt(u), angle(rng)), 3);
        }
        const auto a = eval(ln, w, 0);
        const auto b = eval(qh, w, 1);
        const double c = weight * (std::conj(a) * b).real();
        cross += c;
        cross2 += c * c;
        n_ln += weight * std::norm(a);
        n_qh += weight * std::norm(b);
    }
    cross /= samples;
    n_ln /= samples;
    n_qh /= samples;
    const double estimate = std::sqrt(N + 1.0) * std::abs(cross) / std::sqrt(n_ln * n_qh);
    const double rel_err = std::sqrt((cross2 / samples - cross * cross) / samples) / std::abs(cross);
    EXPECT_LT(rel_err, 0.02);
    EXPECT_NEAR(estimate, std::abs(pump_overlap(N)), 0.03);
    std::cout << "Monte-Carlo estimate " << estimate << " (relative error of the cross term " << rel_err << ")\n";
}

TEST(PolynomialState, ErrorsAndExport)
{
    EXPECT_THROW(polynomial_state(6, 0), std::invalid_argument);
    EXPECT_THROW(polynomial_state(2, -1), std::invalid_argument);
    EXPECT_THROW(laughlin_state(3).embed(lll_sector_basis(3, 18, 3)), std::out_of_range);
    std::ostringstream out;
    laughlin_state(2).write_csv(out);
    const std::string text = out.str();
    EXPECT_EQ(text.substr(0, text.find('\r')), "occupation,amplitude");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
    EXPECT_NEAR(overlap(laughlin_state(3), laughlin_state(3)), 1.0, 1e-14);
    EXPECT_EQ(lll_modes(2), (std::vector<int>{0, 3, 6}));
    EXPECT_EQ(default_m_max(3), 6);
}
