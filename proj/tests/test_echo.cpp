// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nfvs/echo.hpp"
#include "nfvs/testing/dense_reference.hpp"
#include "nfvs/units.hpp"

using namespace nfvs;

namespace {

Eigen::VectorXcd random_vector(Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::VectorXcd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = {g(rng), g(rng)};
    return v;
}

TargetState random_state(std::mt19937_64& rng, const ArrayGeometry& geom) {
    std::uniform_real_distribution<double> range(geom.half_aperture() + 1.0, 30.0);
    std::uniform_real_distribution<double> angle(0.1, kPi - 0.1);
    std::uniform_real_distribution<double> speed(-25.0, 25.0);
    return {{range(rng), angle(rng)}, {speed(rng), speed(rng)}};
}

const ArrayGeometry kSmall = ArrayGeometry::half_wavelength(8, 28e9);

} // namespace

TEST(SteeringVector, ModulusIsInverseDistance) {
    const Position p{7.5, 0.9};
    const auto a = steering_vector(p, kSmall);
    for (Eigen::Index m = 0; m < a.size(); ++m)
        EXPECT_NEAR(std::abs(a[m]), 1.0 / per_antenna_distance(p, kSmall, static_cast<std::size_t>(m)), 1e-15);
}

TEST(SteeringVector, BroadsideSymmetryForOddArray) {
    const auto geom = ArrayGeometry::half_wavelength(9, 28e9);
    const auto a = steering_vector({6.0, kPi / 2}, geom);
    for (Eigen::Index m = 0; m < 4; ++m) EXPECT_NEAR(std::abs(a[m] - a[8 - m]), 0.0, 1e-15);
}

TEST(SteeringVector, PlugInCenterElement) {
    const auto geom = ArrayGeometry::half_wavelength(9, 28e9);
    const double lambda = kSpeedOfLight / 28e9;
    EXPECT_NEAR(lambda, 0.0107068, 1e-7);
    const auto a = steering_vector({10.0, kPi / 2}, geom);
    const cdouble expected = 0.1 * std::exp(cdouble(0.0, -2.0 * kPi * 10.0 / lambda));
    EXPECT_NEAR(std::abs(a[4] - expected), 0.0, 1e-12);
}

TEST(DopplerVector, NoMotionOrNoTimeGivesOnes) {
    const TargetState still{{10.0, 1.0}, {}};
    EXPECT_TRUE(doppler_vector(still, kSmall, 57, 1e-5).isApprox(Eigen::VectorXcd::Ones(8)));
    const TargetState moving{{10.0, 1.0}, {10.0, 8.0}};
    EXPECT_TRUE(doppler_vector(moving, kSmall, 0, 1e-5).isApprox(Eigen::VectorXcd::Ones(8)));
}

TEST(DopplerVector, UnitModulus) {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 20; ++i) {
        const auto d = doppler_vector(random_state(rng, kSmall), kSmall, 123, 1e-5);
        for (Eigen::Index m = 0; m < d.size(); ++m) EXPECT_NEAR(std::abs(d[m]), 1.0, 1e-14);
    }
}

TEST(DopplerVector, CenterElementSeesRadialSpeed) {
    const auto geom = ArrayGeometry::half_wavelength(9, 28e9);
    const double lambda = geom.wavelength();
    const auto d = doppler_vector({{10.0, kPi / 3}, {10.0, 8.0}}, geom, 100, 1e-5);
    const cdouble expected = std::exp(cdouble(0.0, -2.0 * kPi * 10.0 * 1e-3 / lambda));
    EXPECT_NEAR(std::abs(d[4] - expected), 0.0, 1e-12);
}

TEST(DopplerVector, RejectsNegativeIndex) {
    EXPECT_THROW(doppler_vector({{10.0, 1.0}, {}}, kSmall, -1, 1e-5), InvalidArgument);
}

TEST(EchoColumn, ZeroSignalGivesZero) {
    const SensingLink link{{0.3, -0.2}, 0.0};
    const auto y = echo_column({{10.0, 1.0}, {3.0, 4.0}}, kSmall, link, Eigen::VectorXcd::Zero(8), 5, 1e-5);
    EXPECT_EQ(y.norm(), 0.0);
}

TEST(EchoColumn, HadamardOfOuterProductsIsOuterProductOfHadamard) {
    const ArrayGeometry geom(2, 0.4, 0.1);
    const TargetState s{{3.0, 1.2}, {5.0, -2.0}};
    const SensingLink link{{1.0, 0.0}, 0.0};
    const Eigen::VectorXcd sn = Eigen::Vector2cd(cdouble(1.0, 2.0), cdouble(-0.5, 0.25));
    const auto dense = nfvs::testing::dense_echo_column(s, geom, link, sn, 3, 1e-3);
    const auto factored = echo_column(s, geom, link, sn, 3, 1e-3);
    EXPECT_LT((dense - factored).norm(), 1e-12 * dense.norm());
}

TEST(EchoColumn, MatchesDenseConstructionOnRandomInstances) {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 25; ++i) {
        const auto s = random_state(rng, kSmall);
        const SensingLink link{{0.7, 0.4}, 0.0};
        const auto sn = random_vector(8, rng);
        const auto dense = nfvs::testing::dense_echo_column(s, kSmall, link, sn, 77, 1e-5);
        const auto factored = echo_column(s, kSmall, link, sn, 77, 1e-5);
        EXPECT_LT((dense - factored).norm(), 1e-12 * dense.norm());
    }
}

TEST(EchoChannel, SymmetricNotHermitian) {
    std::mt19937_64 rng(4);
    const auto s = random_state(rng, kSmall);
    const auto H = nfvs::testing::dense_channel(s, kSmall, 9, 1e-5);
    EXPECT_LT((H - H.transpose()).norm(), 1e-15);
    EXPECT_GT((H - H.adjoint()).norm(), 1e-6);
}

TEST(ModelMatrix, MatchesDenseAndEnergyScalesWithGain) {
    std::mt19937_64 rng(8);
    const auto s = random_state(rng, kSmall);
    Eigen::MatrixXcd S(8, 6);
    for (Eigen::Index k = 0; k < 6; ++k) S.col(k) = random_vector(8, rng);
    const auto X = model_matrix(s.position, s.velocity, kSmall, S, 1e-5);
    const auto Xd = nfvs::testing::dense_model_matrix(s, kSmall, S, 1e-5);
    EXPECT_LT((X - Xd).norm(), 1e-12 * Xd.norm());
    const cdouble beta{0.2, -0.9};
    EXPECT_NEAR((beta * X).squaredNorm(), std::norm(beta) * X.squaredNorm(), 1e-12 * X.squaredNorm());
}

TEST(GenerateEcho, NoiseFreeEqualsBetaX) {
    std::mt19937_64 rng(1);
    const TargetState s{{9.0, 1.3}, {4.0, -6.0}};
    Eigen::MatrixXcd S(8, 10);
    for (Eigen::Index k = 0; k < 10; ++k) S.col(k) = random_vector(8, rng);
    const SensingLink link{{0.1, 0.2}, 0.0};
    const auto frame = generate_echo(s, kSmall, link, S, 1e-5, rng);
    const auto X = model_matrix(s.position, s.velocity, kSmall, S, 1e-5);
    EXPECT_EQ(frame.received, link.beta * X);
    EXPECT_EQ(frame.transmit, S);
}

TEST(GenerateEcho, FixedSeedIsBitIdentical) {
    const TargetState s{{9.0, 1.3}, {4.0, -6.0}};
    std::mt19937_64 g(99);
    Eigen::MatrixXcd S(8, 10);
    for (Eigen::Index k = 0; k < 10; ++k) S.col(k) = random_vector(8, g);
    const SensingLink link{{0.1, 0.2}, 0.5};
    std::mt19937_64 a(42), b(42);
    EXPECT_EQ(generate_echo(s, kSmall, link, S, 1e-5, a).received, generate_echo(s, kSmall, link, S, 1e-5, b).received);
}

TEST(GenerateEcho, NoiseVarianceAtFullFrameSize) {
    const auto geom = ArrayGeometry::half_wavelength(512, 28e9);
    const TargetState s{{10.0, kPi / 3}, {10.0, 8.0}};
    std::mt19937_64 rng(2024);
    Eigen::MatrixXcd S = Eigen::MatrixXcd::Zero(512, 200);
    S.row(0).setOnes();
    const double sigma2 = 3.981e-16;
    const SensingLink link{{1e-5, 0.0}, sigma2};
    const auto frame = generate_echo(s, geom, link, S, 1e-5, rng);
    const Eigen::MatrixXcd noise = frame.received - link.beta * model_matrix(s.position, s.velocity, geom, S, 1e-5);
    const double var = noise.squaredNorm() / static_cast<double>(noise.size());
    EXPECT_NEAR(var / sigma2, 1.0, 0.03);
    // real and imaginary parts each carry half
    EXPECT_NEAR(noise.real().squaredNorm() / noise.size() / sigma2, 0.5, 0.03);
}

TEST(SensingLink, RadarEquationAt28GHz) {
    const double lambda = kSpeedOfLight / 28e9;
    const double rcs = db_to_linear(-23.0);
    EXPECT_NEAR(rcs, 5.012e-3, 1e-6);
    const double gain = SensingLink::gain_power(lambda, 1.0, 1.0, rcs);
    // independent evaluation of G^2 lambda^2 rcs / (4 pi)^3
    const double expected = lambda * lambda * 5.0118723362727e-3 / (64.0 * kPi * kPi * kPi);
    EXPECT_NEAR(gain, expected, 1e-12 * expected);
    EXPECT_NEAR(gain, 2.90e-10, 0.01e-10);
    const auto link = SensingLink::from_radar_equation(lambda, 1.0, 1.0, rcs, 1e-16, 1.234);
    EXPECT_NEAR(std::norm(link.beta), gain, 1e-12 * gain);
    EXPECT_NEAR(std::arg(link.beta), 1.234, 1e-12);
}

TEST(CommChannel, StaticUserIsTimeInvariant) {
    const TargetState s{{10.0, 1.0}, {}};
    const cdouble bc = comm_gain(kSmall.wavelength(), 1.0, 1.0);
    EXPECT_TRUE(comm_channel(s, kSmall, bc, 1, 1e-5).isApprox(comm_channel(s, kSmall, bc, 150, 1e-5)));
}

TEST(CommChannel, MatchedInnerProductAndModulus) {
    const TargetState s{{10.0, kPi / 2}, {6.0, -3.0}};
    const cdouble bc{0.02, 0.01};
    const auto a = steering_vector(s.position, kSmall);
    const auto h = comm_channel(s, kSmall, bc, 0, 1e-5);
    EXPECT_NEAR(std::abs((h.transpose() * a.conjugate())(0)), std::abs(bc) * a.squaredNorm(), 1e-15);
    const auto hn = comm_channel(s, kSmall, bc, 40, 1e-5);
    for (Eigen::Index m = 0; m < 8; ++m)
        EXPECT_NEAR(std::abs(hn[m]), std::abs(bc) / per_antenna_distance(s.position, kSmall, m), 1e-15);
}
