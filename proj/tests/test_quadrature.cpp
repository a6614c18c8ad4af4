#include <cmath>

#include <gtest/gtest.h>

#include "fluxgrow/numeric.hpp"
#include "fluxgrow/quadrature.hpp"

using namespace fluxgrow;

TEST(RadialQuadrature, GaussianMoments)
{
    auto moment = [](int p) {
        return radial_quadrature([p](double x) { return std::pow(x, p) * std::exp(-2.0 * x * x); });
    };
    EXPECT_NEAR(moment(1).value, 0.25, 1e-12);
    EXPECT_NEAR(moment(3).value, 0.125, 1e-12);
    EXPECT_NEAR(moment(9).value, 24.0 / 64.0, 1e-11);
    EXPECT_TRUE(moment(9).converged);
    EXPECT_GT(moment(9).evaluations, 0);
}

TEST(RadialQuadrature, HighAngularMomentumMoment)
{
    // int x^{2l+1} e^{-2x^2} dx = l! / 2^{l+2}
    for (int l : {6, 12, 15})
    {
        auto r = radial_quadrature([l](double x) { return std::pow(x, 2 * l + 1) * std::exp(-2.0 * x * x); });
        const double exact = std::exp(log_factorial(l) - (l + 2) * std::log(2.0));
        EXPECT_NEAR(r.value / exact, 1.0, 1e-10) << l;
    }
}

TEST(IntegrateInterval, PolynomialAndBreakpoints)
{
    auto r = integrate_interval([](double x) { return 3.0 * x * x; }, 0.0, 2.0);
    EXPECT_NEAR(r.value, 8.0, 1e-13);
    QuadratureConfig cfg;
    cfg.breakpoints = {0.5};
    auto kink = integrate_interval([](double x) { return std::abs(x - 0.5); }, 0.0, 1.0, cfg);
    EXPECT_NEAR(kink.value, 0.25, 1e-14);
}

TEST(IntegrateRealLine, Gaussian)
{
    auto r = integrate_real_line([](double x) { return std::exp(-(x - 3.0) * (x - 3.0)); }, 3.0);
    EXPECT_NEAR(r.value, std::sqrt(pi), 1e-12);
    auto off = integrate_real_line([](double x) { return 1.0 / (1.0 + x * x); }, 0.0);
    EXPECT_NEAR(off.value, pi, 1e-9);
}

TEST(Quadrature, BudgetExhaustionIsReported)
{
    QuadratureConfig cfg;
    cfg.max_evaluations = 40;
    cfg.rel_tol = 1e-14;
    cfg.abs_tol = 0.0;
    auto r = integrate_interval([](double x) { return std::sin(200.0 * x); }, 0.0, 3.0, cfg);
    EXPECT_FALSE(r.converged);
    try
    {
        require_converged(r, "oscillatory");
        FAIL() << "expected QuadratureError";
    }
    catch (const QuadratureError& e)
    {
        EXPECT_EQ(e.partial().evaluations, r.evaluations);
        EXPECT_NE(std::string(e.what()).find("oscillatory"), std::string::npos);
    }
}

TEST(ParallelFor, VisitsEveryIndexAndRethrows)
{
    std::vector<int> hits(100, 0);
    parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits)
        EXPECT_EQ(h, 1);
    EXPECT_THROW(parallel_for(10, 3,
                              [](std::size_t i) {
                                  if (i == 7)
                                      throw std::runtime_error("boom");
                              }),
                 std::runtime_error);
}

TEST(Numeric, LogFactorial)
{
    EXPECT_NEAR(factorial(5), 120.0, 1e-10);
    EXPECT_NEAR(log_factorial_ratio(10, 7), std::log(720.0), 1e-12);
    EXPECT_THROW(log_factorial(-1), std::domain_error);
}
