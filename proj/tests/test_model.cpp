#include "test_support.hpp"
#include "ttb/errors.hpp"
#include "ttb/model.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <gtest/gtest.h>

#include <sstream>

using namespace ttb;
using namespace ttb::testing;

namespace {

// Posterior moments of lambda1 by quadrature of the unnormalised joint.
std::array<double, 2> quadrature_moments(double x, double lambda2, const ProductGammaHyper& h) {
    const GammaParams ref = lambda1_conditional(x, lambda2, h);
    const double mode = std::max(ref.mean(), 1e-300);
    const double shift = product_gamma_log_joint(x, mode, lambda2, h);
    boost::math::quadrature::exp_sinh<double> integrator;
    auto moment = [&](int p) {
        return integrator.integrate([&](double l) {
            if (!(l > 0.0)) return 0.0;
            return std::pow(l, p) * std::exp(product_gamma_log_joint(x, l, lambda2, h) - shift);
        });
    };
    const double z = moment(0), m1 = moment(1) / z, m2 = moment(2) / z;
    return {m1, m2 - m1 * m1};
}

}  // namespace

TEST(Conjugacy, ZeroObservationKeepsPrior) {
    const ProductGammaHyper h{2.5, 0.75, 1.0, 1.0};
    const GammaParams g = lambda1_conditional(0.0, 3.0, h);
    EXPECT_EQ(g.shape, 3.0);
    EXPECT_EQ(g.rate, 0.75);
}

TEST(Conjugacy, PluggedExample) {
    const GammaParams g = lambda1_conditional(1.0, 2.0, {1.0, 1.0, 1.0, 1.0});
    EXPECT_DOUBLE_EQ(g.shape, 1.5);
    EXPECT_DOUBLE_EQ(g.rate, 2.0);
    EXPECT_DOUBLE_EQ(g.mean(), 0.75);
    EXPECT_TRUE(conjugacy_oracle(1.0, 2.0, {1.0, 1.0, 1.0, 1.0}, 200000, 1).within(3.0));
}

TEST(Conjugacy, VagueHyperLargeX) {
    const ProductGammaHyper h{1e-6, 1e-6, 1.0, 1.0};
    const double x = 50.0, l2 = 0.8;
    const ConjugacyCheck c = conjugacy_oracle(x, l2, h, 200000, 2);
    EXPECT_TRUE(c.within(3.0));
    EXPECT_NEAR(c.empirical_mean, 1.0 / (l2 * x * x), 3.0 * c.mean_stderr + 1e-6 / (l2 * x * x));
}

TEST(Conjugacy, ClosedFormMatchesQuadrature) {
    Rng rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        const double x = 3.0 * rng.normal();
        const double l2 = 0.2 + 3.0 * rng.uniform();
        const ProductGammaHyper h{0.5 + 3.0 * rng.uniform(), 0.2 + 2.0 * rng.uniform(), 1.0, 1.0};
        const GammaParams g = lambda1_conditional(x, l2, h);
        const auto q = quadrature_moments(x, l2, h);
        EXPECT_LE(rel_diff(q[0], g.mean()), 1e-7) << trial;
        EXPECT_LE(rel_diff(q[1], g.shape / (g.rate * g.rate)), 1e-6) << trial;
    }
}

// Statistical property: 20 random draws each pass at 3 sigma.
TEST(Conjugacy, OraclePassesOnRandomDraws) {
    Rng rng(42);
    for (int trial = 0; trial < 20; ++trial) {
        const double x = 2.0 * rng.normal();
        const double l2 = 0.2 + 3.0 * rng.uniform();
        const ProductGammaHyper h{0.5 + 3.0 * rng.uniform(), 0.2 + 2.0 * rng.uniform(), 0.5 + rng.uniform(),
                                  0.5 + rng.uniform()};
        const ConjugacyCheck c = conjugacy_oracle(x, l2, h, 100000, 1000 + static_cast<std::uint64_t>(trial));
        EXPECT_TRUE(c.within(3.0)) << "trial " << trial << " mean " << c.empirical_mean << " vs "
                                   << c.analytic_mean << " var " << c.empirical_var << " vs " << c.analytic_var;
    }
}

TEST(Conjugacy, RejectsBadArguments) {
    EXPECT_THROW(conjugacy_oracle(1.0, 0.0, {}, 1000, 0), std::invalid_argument);
    EXPECT_THROW(conjugacy_oracle(1.0, 1.0, {-1.0, 1.0, 1.0, 1.0}, 1000, 0), std::invalid_argument);
}

TEST(SliceDensity, ColumnScaling) {
    Rng rng(43);
    Eigen::MatrixXd s(4, 3);
    for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = rng.normal();
    Eigen::MatrixXd scaled = s;
    const double c = 3.7;
    scaled.col(1) *= c;
    EXPECT_NEAR(slice_prior_log_density(scaled, 4) - slice_prior_log_density(s, 4), -4.0 * std::log(c), 1e-12);
}

TEST(SliceDensity, DependsOnlyOnColumnNorms) {
    Eigen::MatrixXd a(2, 2), b(2, 2);
    a << 3, 0, 4, 1;
    b << 0, 1, 5, 0;
    EXPECT_DOUBLE_EQ(slice_prior_log_density(a, 2), slice_prior_log_density(b, 2));
}

TEST(SliceDensity, DepthOneExample) {
    Eigen::MatrixXd one(1, 1), two(1, 1);
    one << 1;
    two << 2;
    EXPECT_NEAR(slice_prior_log_density(two, 1) - slice_prior_log_density(one, 1), -0.5 * std::log(4.0), 1e-15);
    EXPECT_EQ(slice_prior_log_density(Eigen::MatrixXd::Zero(1, 1), 1), -std::numeric_limits<double>::infinity());
    EXPECT_THROW(slice_prior_log_density(one, 2), ShapeError);
}

TEST(PriorHyper, DefaultsAndResize) {
    const PriorHyper p = PriorHyper{}.resized({1, 3, 2, 1});
    EXPECT_EQ(p.alpha.size(), 4u);
    EXPECT_TRUE(p.alpha[0].empty());
    EXPECT_TRUE(p.alpha[3].empty());
    EXPECT_EQ(p.alpha[1], (std::vector<double>(3, 1e-6)));
    EXPECT_EQ(p.beta[2], (std::vector<double>(2, 1e-6)));
    EXPECT_EQ(p.alpha_tau, 1e-6);
    EXPECT_NO_THROW(p.validate());
    PriorHyper bad = p;
    bad.beta[1][0] = 0.0;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = p;
    bad.alpha_tau = -1.0;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(ModelState, AccessorsAreShapeOverRate) {
    Rng rng(44);
    const ModelState s = random_state(rng, {3, 4, 2}, {1, 2, 3, 1});
    EXPECT_EQ(s.tau.mean(), s.tau.shape / s.tau.rate);
    for (std::size_t i = 1; i < 3; ++i)
        for (std::size_t k = 0; k < s.ranks[i]; ++k)
            EXPECT_EQ(s.lambdas.mean(i, k), s.lambdas.iface[i][k].shape / s.lambdas.iface[i][k].rate);
    EXPECT_EQ(s.lambdas.mean(0, 0), 1.0);
    EXPECT_EQ(s.lambdas.mean(3, 0), 1.0);
    EXPECT_EQ(s.dims(), (Dims{3, 4, 2}));
}

TEST(ModelState, ValidateCatchesViolations) {
    Rng rng(45);
    const ModelState good = random_state(rng, {3, 4, 2}, {1, 2, 3, 1});
    EXPECT_NO_THROW(good.validate());
    ModelState s = good;
    s.cores[1].var(0, 0, 0) = 0.0;
    EXPECT_THROW(s.validate(), NumericalError);
    s = good;
    s.tau.rate = 0.0;
    EXPECT_THROW(s.validate(), NumericalError);
    s = good;
    s.lambdas.iface[1][0].shape = -1.0;
    EXPECT_THROW(s.validate(), NumericalError);
    s = good;
    s.ranks[1] = 3;
    EXPECT_THROW(s.validate(), ShapeError);
    s = good;
    s.lambdas.iface[2].pop_back();
    EXPECT_THROW(s.validate(), ShapeError);
}

TEST(ModelState, CheckpointRoundtrip) {
    Rng rng(46);
    const ModelState s = random_state(rng, {3, 4, 2, 5}, {1, 2, 3, 2, 1});
    std::stringstream buf;
    write_model_state(buf, s);
    EXPECT_EQ(buf.str().substr(0, 4), "TTMS");
    EXPECT_EQ(read_model_state(buf), s);

    const std::string path = temp_path("state.ttms");
    save_model_state(path, s);
    EXPECT_EQ(load_model_state(path), s);
}

TEST(ModelState, CheckpointRejectsBadInput) {
    Rng rng(47);
    std::stringstream buf;
    write_model_state(buf, random_state(rng, {2, 2}, {1, 2, 1}));
    std::string bytes = buf.str();
    std::string wrong_version = bytes;
    wrong_version[4] = 9;
    std::istringstream v(wrong_version);
    EXPECT_THROW(read_model_state(v), FormatError);
    std::istringstream t(bytes.substr(0, bytes.size() / 2));
    EXPECT_THROW(read_model_state(t), FormatError);
    std::istringstream m("TTMX");
    EXPECT_THROW(read_model_state(m), FormatError);
}
