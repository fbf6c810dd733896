#include "fourtran/fields.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace fourtran;

using testutil::max_diff;
using testutil::random_field;

TEST(Grid, IndexingAndWorld) {
    const Grid g = Grid::make(3, {4, 5, 6}, 0.01, {1.0, 2.0, 3.0});
    EXPECT_EQ(g.cells(), 120u);
    for (std::size_t i = 0; i < g.cells(); ++i) EXPECT_EQ(g.flat(g.unflatten(i)), i);
    EXPECT_EQ(g.flat({1, 0, 0}), 30u);
    const auto w = g.world({2, 3, 4});
    EXPECT_DOUBLE_EQ(w[0], 1.0 + 2 * 0.01);
    EXPECT_DOUBLE_EQ(w[2], 3.0 + 4 * 0.01);
    EXPECT_FALSE(g.contains({4, 0, 0}));
    EXPECT_FALSE(g.contains({0, -1, 0}));
    const Grid p = Grid::make(2, {7, 9, 5});
    EXPECT_EQ(p.shape[2], 1);
}

TEST(RotateField, QuarterTurnMatchesIndexMap2D) {
    std::mt19937_64 rng(31);
    const Grid g = Grid::make(2, {9, 9, 1});
    const ScalarField f = random_field(g, 2, rng);
    const ScalarField r = rotate_field(f, Rot2(kPi / 2), RotationMode::ExactSubgroup);
    // (beta f)(x) = f(R^-1 x); about the center (4, 4), R^-1 (dx, dy) = (dy, -dx).
    for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 9; ++j)
            for (int c = 0; c < 2; ++c)
                EXPECT_EQ(r.at(Cell{i, j, 0}, c), f.at(Cell{4 + (j - 4), 4 - (i - 4), 0}, c));
}

TEST(RotateField, ExactAndInterpolatedAgreeOnCubeRotations) {
    std::mt19937_64 rng(32);
    const Grid g = Grid::make(3, {5, 6, 5});
    const ScalarField f = random_field(g, 1, rng);
    const Rotation y90 = Rot3::from_axis_angle(Eigen::Vector3d::UnitY(), kPi / 2);
    EXPECT_TRUE(is_grid_exact(g, y90));
    EXPECT_FALSE(is_grid_exact(g, Rot3::from_axis_angle(Eigen::Vector3d::UnitZ(), kPi / 2)));  // 5x6 footprint
    const auto a = rotate_field(f, y90, RotationMode::ExactSubgroup);
    const auto b = rotate_field(f, y90, RotationMode::Interpolated);
    EXPECT_LT(max_diff(a.data, b.data), 1e-12);
    EXPECT_THROW(rotate_field(f, Rot3::from_axis_angle(Eigen::Vector3d::UnitX(), 0.3), RotationMode::ExactSubgroup),
                 std::invalid_argument);
}

TEST(RotateField, InterpolationIsMultilinearWithZeroExterior) {
    // A linear ramp is reproduced inside, zero padding outside.
    const Grid g = Grid::make(2, {11, 11, 1});
    ScalarField f = ScalarField::zeros(g);
    for (std::size_t i = 0; i < g.cells(); ++i) f.data[i] = 1.0 + 0.1 * g.unflatten(i)[0];
    const double t = 0.3;
    const auto r = rotate_field(f, Rot2(t), RotationMode::Interpolated);
    const auto c = g.center();
    for (std::size_t i = 0; i < g.cells(); ++i) {
        const Cell q = g.unflatten(i);
        const double dx = q[0] - c[0], dy = q[1] - c[1];
        const double sx = std::cos(t) * dx + std::sin(t) * dy + c[0];
        const double sy = -std::sin(t) * dx + std::cos(t) * dy + c[1];
        if (sx >= 0 && sx <= 10 && sy >= 0 && sy <= 10) EXPECT_NEAR(r.data[i], 1.0 + 0.1 * sx, 1e-12);
        if (sx < -1 || sx > 11 || sy < -1 || sy > 11) EXPECT_EQ(r.data[i], 0.0);
    }
}

TEST(Crop, CopiesWindowAndZeroPads) {
    std::mt19937_64 rng(33);
    const Grid g = Grid::make(3, {8, 8, 8}, 0.02, {0.1, 0.2, 0.3});
    const ScalarField f = random_field(g, 1, rng);
    const ScalarField c = crop(f, {1, 4, 6}, {5, 3, 5});
    EXPECT_EQ(c.grid.shape, (std::array<int, 3>{5, 3, 5}));
    for (std::size_t i = 0; i < c.grid.cells(); ++i) {
        const Cell q = c.grid.unflatten(i);
        const Cell src{1 + q[0] - 2, 4 + q[1] - 1, 6 + q[2] - 2};
        EXPECT_EQ(c.data[i], g.contains(src) ? f.at(src) : 0.0);
    }
    EXPECT_DOUBLE_EQ(c.grid.origin[0], 0.1 + (1 - 2) * 0.02);
    EXPECT_THROW(crop(f, {1, 1, 1}, {4, 3, 3}), std::invalid_argument);
}

TEST(Lift, ChannelBlocksAreRotatedCopies) {
    std::mt19937_64 rng(34);
    const Grid g = Grid::make(2, {9, 9, 1});
    const ScalarField f = random_field(g, 2, rng);
    const auto set = sample_rotation_set(8, PlanarGrid{});
    const ScalarField l = lift(f, set);
    ASSERT_EQ(l.channels, 16);
    for (std::size_t i = 0; i < set.size(); ++i) {
        const ScalarField r = rotate_field(f, set.rotations[i]);
        for (std::size_t cell = 0; cell < g.cells(); ++cell)
            for (int c = 0; c < 2; ++c) EXPECT_EQ(l.data[cell * 16 + i * 2 + static_cast<std::size_t>(c)], r.at(cell, c));
    }
}

TEST(FiberFourier, PerCellTransformOfLiftedSamples) {
    std::mt19937_64 rng(35);
    const Grid g = Grid::make(2, {7, 7, 1});
    const ScalarField f = random_field(g, 1, rng);
    const auto set = sample_rotation_set(8, PlanarGrid{});
    const SteerableKernel k = fiber_fourier(lift(f, set), set, 4);
    for (std::size_t cell = 0; cell < g.cells(); ++cell) {
        std::vector<double> samples(8);
        for (std::size_t i = 0; i < 8; ++i) samples[i] = rotate_field(f, set.rotations[i]).data[cell];
        const auto expect = so2_forward(samples, 4).flat();
        const auto got = k.base.coeffs(cell);
        for (std::size_t j = 0; j < expect.size(); ++j) EXPECT_NEAR(got[j], expect[j], 1e-12);
    }
}

TEST(Steerability, PlanarC8ExactForQuarterTurns) {
    std::mt19937_64 rng(36);
    const Grid g = Grid::make(2, {11, 11, 1});
    const ScalarField f = random_field(g, 1, rng);
    const auto set = sample_rotation_set(8, PlanarGrid{});
    const SteerableKernel k = fiber_fourier(lift(f, set), set, 4);
    for (int q = 0; q < 4; ++q) EXPECT_LE(steerability_defect(k, Rot2(q * kPi / 2), RotationMode::ExactSubgroup), 1e-12);
    // A generic kernel is far from steerable under a non-member rotation.
    const SteerableKernel raw{k.base, RepSpec::trivial(), k.output_type, k.lift};
    EXPECT_GT(steerability_defect(raw, Rot2(0.3), RotationMode::Interpolated), 1e-3);
}

TEST(Steerability, SpatialCubeGroupLiftIsExact) {
    // Lifting over a set closed under the cube group gives exact steerability
    // for cube rotations at any band limit.
    std::mt19937_64 rng(37);
    const Grid g = Grid::make(3, {7, 7, 7});
    const ScalarField f = random_field(g, 1, rng);
    const auto set = sample_rotation_set(1, SymmetrizedSampling{finite_group("o24"), true});
    const SteerableKernel k = fiber_fourier(lift(f, set), set, 2);
    const auto cube = finite_group("o24");
    for (std::size_t i = 0; i < cube.size(); i += 5)
        EXPECT_LE(steerability_defect(k, cube.elements[i], RotationMode::ExactSubgroup), 1e-9);
}

TEST(RotateFiber, MatchesRepresentation) {
    std::mt19937_64 rng(38);
    const FiberDescriptor fd{3, 2};
    std::vector<double> v(fd.size());
    for (double& x : v) x = testutil::uniform(rng, -1, 1);
    const Rotation g = random_rotation(3, rng);
    std::vector<double> r = v;
    rotate_fiber(fd, g, r);
    // Each Wigner block of width (2l+1) has (2l+1) columns: rho = sum (2l+1) D^l,
    // acting on the row index of every block.
    const Eigen::MatrixXd rho = evaluate(fd.rep(), g);
    ASSERT_EQ(rho.rows(), 35);
    Eigen::VectorXd expect = Eigen::VectorXd::Zero(35);
    std::size_t off = 0;
    for (int l = 0; l <= 2; ++l) {
        const int n = 2 * l + 1;
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> blk(v.data() + off, n, n);
        Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(expect.data() +
                                                                                          static_cast<Eigen::Index>(off),
                                                                                          n, n) =
            wigner_d_real(l, g.spatial()) * blk;
        off += static_cast<std::size_t>(n * n);
    }
    for (std::size_t i = 0; i < 35; ++i) EXPECT_NEAR(r[i], expect[static_cast<Eigen::Index>(i)], 1e-12);
    EXPECT_EQ(FiberDescriptor::from_rep(fd.rep()), fd);
}

TEST(Sfld, ScalarRoundTrip) {
    std::mt19937_64 rng(39);
    const Grid g = Grid::make(3, {3, 4, 5}, 0.01, {0.5, -0.5, 0.25});
    const ScalarField f = random_field(g, 2, rng);
    std::stringstream ss;
    write_field(ss, f);
    const std::string bytes = ss.str();
    EXPECT_EQ(bytes.substr(0, 4), "SFLD");
    const ScalarField back = read_scalar_field(ss);
    EXPECT_EQ(back.grid.shape, g.shape);
    EXPECT_EQ(back.channels, 2);
    EXPECT_DOUBLE_EQ(back.grid.cell_size, 0.01);
    EXPECT_DOUBLE_EQ(back.grid.origin[1], -0.5);
    for (std::size_t i = 0; i < f.data.size(); ++i) EXPECT_EQ(back.data[i], static_cast<double>(static_cast<float>(f.data[i])));
}

TEST(Sfld, FourierRoundTripAndBadMagic) {
    const Grid g = Grid::make(2, {4, 4, 1}, 0.5);
    FourierField f = FourierField::zeros(g, {2, 3}, 1);
    for (std::size_t i = 0; i < f.data.size(); ++i) f.data[i] = 0.25 * static_cast<double>(i);
    std::stringstream ss;
    write_field(ss, f);
    const FourierField back = read_fourier_field(ss);
    EXPECT_EQ(back.fiber, f.fiber);
    EXPECT_EQ(back.data, f.data);
    std::stringstream bad("XXXXjunk");
    EXPECT_THROW(read_scalar_field(bad), std::runtime_error);
}
