#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "fluxgrow/losses.hpp"

using namespace fluxgrow;

namespace
{
    LossParams loss_point(double omega_T, double g_T)
    {
        LossParams p;
        p.Omega_T = omega_T;
        p.g_T = g_T;
        p.gamma_T = 100.0;
        p.a = 0.005;
        p.xi = 0.25;
        return p;
    }

    double trapezoid(const std::function<double(double)>& f, double lo, double hi, int n)
    {
        const double h = (hi - lo) / n;
        double s = 0.5 * (f(lo) + f(hi));
        for (int i = 1; i < n; ++i)
            s += f(lo + i * h);
        return s * h;
    }
} // namespace

TEST(MixingAngles, Examples)
{
    auto p = loss_point(10.0, 3.0);
    // Omega_0 vanishes for tau -> -infinity in step one.
    EXPECT_NEAR(mixing_angles(Step::One, 1.0, -80.0, p).phi, 0.0, 1e-15);
    // Equal amplitudes at tau = 0 when kappa = 1.
    p.a = 1e-9;
    EXPECT_NEAR(mixing_angles(Step::One, 1.0, 0.0, p).phi, pi / 4, 1e-8);
    // Both pulses vanish at x = 0 and tau -> +infinity in step two (Omega_2 ~ x^2).
    auto far = mixing_angles(Step::Two, 0.0, 200.0, p);
    EXPECT_NEAR(far.theta, 0.0, 1e-15);
    for (double x : {0.0, 0.2, 1.5})
        for (double tau : {-5.0, 0.0, 5.0, 12.0})
            for (Step s : {Step::One, Step::Two})
            {
                const auto m = mixing_angles(s, x, tau, p);
                EXPECT_GE(m.phi, 0.0);
                EXPECT_LE(m.phi, pi / 2);
                EXPECT_GE(m.theta, 0.0);
                EXPECT_LE(m.theta, pi / 2);
                EXPECT_EQ(m.which_step, s);
            }
    EXPECT_THROW(mixing_angles(Step::One, -1.0, 0.0, p), std::domain_error);
}

TEST(SurvivalClosedForm, Examples)
{
    auto p = loss_point(60.0, 20.0);
    p.gamma_T = 0.0;
    EXPECT_EQ(survival_closed_form(0.3, p, Step::One), 1.0);

    p.gamma_T = 100.0;
    const double g2 = 400.0, o2 = 3600.0;
    EXPECT_NEAR(survival_closed_form(0.0, p, Step::One), std::exp(-25.0 * (2.0 / g2 - 1.0 / (g2 + o2) - 1.0 / g2)),
                1e-15);
}

TEST(SurvivalClosedForm, LargeRabiLimit)
{
    auto p = loss_point(1e9, 20.0);
    // Both Rabi terms drop out when f > 0; only one drops out at the node of f.
    EXPECT_NEAR(survival_closed_form(0.5, p, Step::One), std::exp(-25.0 * 2.0 / 400.0), 1e-12);
    EXPECT_NEAR(survival_closed_form(0.5, p, Step::Two), std::exp(-25.0 * 2.0 / 400.0), 1e-12);
    EXPECT_NEAR(survival_closed_form(0.0, p, Step::Two), std::exp(-25.0 / 400.0), 1e-12);
}

TEST(SurvivalClosedForm, MonotoneInCoupling)
{
    for (double x : {0.0, 0.05, 0.3, 1.0})
        for (Step s : {Step::One, Step::Two})
        {
            double prev = 0.0;
            for (double g = 1.0; g <= 100.0; g *= 1.5)
            {
                const double e = survival_closed_form(x, loss_point(60.0, g), s);
                EXPECT_GE(e, prev - 1e-15);
                EXPECT_GE(e, 0.0);
                EXPECT_LE(e, 1.0);
                prev = e;
            }
        }
}

TEST(SurvivalIntegral, MatchesClosedForm)
{
    for (double om : {20.0, 60.0, 100.0})
        for (double g : {5.0, 20.0, 50.0})
            for (double x : {0.0, 0.01, 0.1, 0.3, 1.0, 2.0, 3.0})
                for (Step s : {Step::One, Step::Two})
                {
                    const auto p = loss_point(om, g);
                    const double closed = survival_closed_form(x, p, s);
                    const double quad = survival_integral_numeric(x, p, s);
                    EXPECT_NEAR(quad / closed, 1.0, 1e-3) << om << " " << g << " " << x;
                }
}

TEST(SurvivalIntegral, ExponentScalesInverselyWithT)
{
    const auto p = loss_point(60.0, 20.0);
    auto doubled = p;
    doubled.Omega_T *= 2.0;
    doubled.g_T *= 2.0;
    doubled.gamma_T *= 2.0;
    for (Step s : {Step::One, Step::Two})
    {
        const double e1 = std::log(survival_integral_numeric(0.4, p, s));
        const double e2 = std::log(survival_integral_numeric(0.4, doubled, s));
        EXPECT_NEAR(e2 / e1, 0.5, 1e-8);
    }
}

TEST(FiveLevel, LosslessAdiabaticLimit)
{
    auto p = loss_point(400.0, 400.0);
    p.gamma_T = 0.0;
    EXPECT_NEAR(five_level_evolve(0.5, p, Step::One), 1.0, 1e-3);
}

TEST(FiveLevel, StrongCouplingSuppressesLoss)
{
    const double weak = five_level_evolve(0.5, loss_point(60.0, 10.0), Step::One);
    const double strong = five_level_evolve(0.5, loss_point(60.0, 100.0), Step::One);
    EXPECT_GT(strong, weak);
    EXPECT_GT(strong, 0.95);
}

TEST(FiveLevel, AgreesWithClosedFormInDampedRegime)
{
    const auto p = loss_point(60.0, 20.0);
    for (Step s : {Step::One, Step::Two})
    {
        const double oracle = five_level_evolve(0.3, p, s);
        EXPECT_NEAR(survival_closed_form(0.3, p, s) / oracle, 1.0, 0.05);
    }
}

TEST(FiveLevel, DarkVectorIsNullOfHamiltonian)
{
    const double o1 = 1.3, o2 = 0.4, g = 2.0;
    const auto d = five_level_dark(o1, o2, g);
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(5, 5);
    h(0, 1) = h(1, 0) = o1;
    h(1, 2) = h(2, 1) = o2;
    h(0, 3) = h(3, 0) = g;
    h(2, 4) = h(4, 2) = g;
    h(0, 0) = h(2, 2) = cplx(0.0, -3.0);
    EXPECT_LT((h * d).norm(), 1e-14);
    EXPECT_NEAR(d.norm(), 1.0, 1e-15);
}

TEST(DarkOverlap, Limits)
{
    EXPECT_NEAR(dark_overlap_pin(loss_point(1e8, 10.0)), 1.0, 1e-4);
    EXPECT_LT(dark_overlap_pin(loss_point(1e-8, 10.0)), 1e-15);
}

TEST(DarkOverlap, MatchesDenseTrapezoid)
{
    const auto p = loss_point(80.0, 10.0);
    auto weighted = [&](double x) {
        const double k = kappa(x, p.a);
        return x * std::exp(-x * x / (p.xi * p.xi)) * 6400.0 * k * k / (100.0 + 6400.0 * k * k);
    };
    auto norm = [&](double x) { return x * std::exp(-x * x / (p.xi * p.xi)); };
    const double oracle = (trapezoid(weighted, 0.0, 0.05, 200000) + trapezoid(weighted, 0.05, 3.0, 400000)) /
                          trapezoid(norm, 0.0, 3.0, 400000);
    EXPECT_NEAR(dark_overlap_pin(p), oracle, 1e-8);
}

TEST(DarkOverlap, CustomDensity)
{
    auto p = loss_point(80.0, 10.0);
    p.density = [](double x) { return x < 0.2 ? 1.0 : 0.0; };
    auto weighted = [&](double x) {
        const double k = kappa(x, p.a);
        return x * 6400.0 * k * k / (100.0 + 6400.0 * k * k);
    };
    const double oracle = (trapezoid(weighted, 0.0, 0.05, 200000) + trapezoid(weighted, 0.05, 0.2, 200000)) / 0.02;
    EXPECT_NEAR(dark_overlap_pin(p), oracle, 1e-7);
    p.density = [](double) { return 0.0; };
    EXPECT_THROW(dark_overlap_pin(p), std::invalid_argument);
}

TEST(Fidelity, FactorizesAndIsBounded)
{
    const auto surface = fidelity_surface(loss_point(0, 0), linspace(10.0, 100.0, 4), linspace(1.0, 100.0, 6), 2);
    ASSERT_EQ(surface.size(), 24u);
    EXPECT_EQ(surface[1].Omega_T, 10.0);
    EXPECT_EQ(surface[6].Omega_T, 40.0);
    for (const auto& s : surface)
    {
        EXPECT_EQ(s.value.F, s.value.p * s.value.p_in);
        for (double v : {s.value.p, s.value.p_in, s.value.F})
        {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
    }
}

TEST(Fidelity, LosslessStrongDriveIsPerfect)
{
    auto p = loss_point(1e8, 10.0);
    p.gamma_T = 0.0;
    EXPECT_NEAR(flux_insertion_fidelity(p).F, 1.0, 1e-4);
}

TEST(Fidelity, InteriorMaximumAlongCoupling)
{
    const auto g = linspace(1.0, 100.0, 100);
    std::vector<double> f;
    for (double gt : g)
        f.push_back(flux_insertion_fidelity(loss_point(100.0, gt)).F);
    const auto best = std::max_element(f.begin(), f.end()) - f.begin();
    EXPECT_GT(best, 0);
    EXPECT_LT(best, static_cast<long>(f.size()) - 1);
    EXPECT_GT(f[best], f.front());
    EXPECT_GT(f[best], f.back());
}

TEST(Fidelity, SurfaceCsv)
{
    std::ostringstream out;
    write_surface_csv(out, fidelity_surface(loss_point(0, 0), {50.0}, {10.0, 20.0}));
    const std::string text = out.str();
    EXPECT_EQ(text.substr(0, text.find('\r')), "Omega_T,g_T,p,p_in,F");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
}

TEST(LossParams, Validation)
{
    auto p = loss_point(10.0, 0.0);
    EXPECT_THROW(survival_closed_form(0.1, p, Step::One), std::invalid_argument);
    p = loss_point(10.0, 1.0);
    p.gamma_T = -1.0;
    EXPECT_THROW(flux_insertion_fidelity(p), std::invalid_argument);
    EXPECT_TRUE(linspace(0.0, 1.0, 0).empty());
    EXPECT_EQ(linspace(2.0, 3.0, 1), std::vector<double>{2.0});
}
