#include "fourtran/group.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <map>
#include <set>

using namespace fourtran;
using testutil::rodrigues;

TEST(Rot2, CanonicalRange) {
    EXPECT_NEAR(Rot2(-0.5).theta(), kTwoPi - 0.5, 1e-15);
    EXPECT_NEAR(Rot2(7.0).theta(), 7.0 - kTwoPi, 1e-15);
    EXPECT_EQ(Rot2(kTwoPi).theta(), 0.0);
    const Rot2 r = Rot2(3.0).compose(Rot2(4.0));
    EXPECT_GE(r.theta(), 0.0);
    EXPECT_LT(r.theta(), kTwoPi);
}

TEST(Rot2, ComposeMatchesMatrixProduct) {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 100; ++i) {
        const Rot2 a(testutil::uniform(rng, -10, 10)), b(testutil::uniform(rng, -10, 10));
        EXPECT_TRUE((a.compose(b).matrix() - a.matrix() * b.matrix()).cwiseAbs().maxCoeff() < 1e-12);
        EXPECT_TRUE((a.inverse().matrix() - a.matrix().transpose()).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST(Rot3, ComposeMatchesRodriguesProduct) {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 200; ++i) {
        const Eigen::Vector3d ax = testutil::random_axis(rng), bx = testutil::random_axis(rng);
        const double aa = testutil::uniform(rng, 0, kPi), ba = testutil::uniform(rng, 0, kPi);
        const Rot3 a = Rot3::from_axis_angle(ax, aa), b = Rot3::from_axis_angle(bx, ba);
        const Eigen::Matrix3d expect = rodrigues(ax, aa) * rodrigues(bx, ba);
        EXPECT_LT((a.compose(b).matrix() - expect).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LT((a.inverse().matrix() - rodrigues(ax, aa).transpose()).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Rot3, CanonicalQuaternion) {
    const Rot3 a(-0.5, 0.5, 0.5, 0.5), b(0.5, -0.5, -0.5, -0.5);
    EXPECT_EQ(a, b);
    EXPECT_GE(a.w(), 0.0);
    const Rot3 c(0.0, 0.0, -1.0, 0.0);
    EXPECT_GT(c.y(), 0.0);
    const Rot3 d(1.0, 2.0, 3.0, 4.0);
    const auto& q = d.quaternion();
    EXPECT_NEAR(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3], 1.0, 1e-12);
}

TEST(Rot3, FromMatrixRoundTrip) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 100; ++i) {
        const Eigen::Matrix3d m = rodrigues(testutil::random_axis(rng), testutil::uniform(rng, 0, kPi));
        EXPECT_LT((Rot3::from_matrix(m).matrix() - m).cwiseAbs().maxCoeff(), 1e-12);
    }
    // Half turn: w = 0 branch.
    const Eigen::Matrix3d h = rodrigues(Eigen::Vector3d(1, 2, 3), kPi);
    EXPECT_LT((Rot3::from_matrix(h).matrix() - h).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Rot3, ZyzRoundTrip) {
    std::mt19937_64 rng(4);
    for (int i = 0; i < 100; ++i) {
        const Rotation g = random_rotation(3, rng);
        const auto [a, b, c] = g.spatial().zyz();
        EXPECT_LT(geodesic_distance(Rot3::from_zyz(a, b, c), g), 1e-10);
        const Eigen::Matrix3d expect = rodrigues(Eigen::Vector3d::UnitZ(), a) * rodrigues(Eigen::Vector3d::UnitY(), b) *
                                       rodrigues(Eigen::Vector3d::UnitZ(), c);
        EXPECT_LT((g.spatial().matrix() - expect).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(Rotation, GeodesicMatchesTraceFormula) {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 200; ++i) {
        const Rotation a = random_rotation(3, rng), b = random_rotation(3, rng);
        const Eigen::Matrix3d rel = a.spatial().matrix().transpose() * b.spatial().matrix();
        EXPECT_NEAR(geodesic_distance(a, b), testutil::angle_of(rel), 1e-7);
    }
    EXPECT_NEAR(geodesic_distance(Rot2(0.1), Rot2(kTwoPi - 0.1)), 0.2, 1e-12);
    EXPECT_EQ(geodesic_distance(Rot3{}, Rot3{}), 0.0);
}

TEST(Rotation, DimensionMismatchThrows) {
    EXPECT_THROW(compose(Rotation(Rot2(1.0)), Rotation(Rot3{})), std::invalid_argument);
    EXPECT_THROW(geodesic_distance(Rotation(Rot2(1.0)), Rotation(Rot3{})), std::invalid_argument);
}

namespace {

void check_group(const FiniteRotationGroup& g) {
    const auto n = g.size();
    EXPECT_EQ(g.table.size(), n * n);
    EXPECT_LT(geodesic_distance(g.elements[g.identity_index], Rotation::identity(g.dim)), 1e-12);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const Eigen::MatrixXd prod = g.elements[i].matrix() * g.elements[j].matrix();
            EXPECT_LT((g.elements[g.product(i, j)].matrix() - prod).cwiseAbs().maxCoeff(), 1e-9);
        }
        EXPECT_EQ(g.product(i, g.inverse_of(i)), g.identity_index);
        for (std::size_t j = i + 1; j < n; ++j) EXPECT_GT(geodesic_distance(g.elements[i], g.elements[j]), 1e-9);
    }
}

}  // namespace

TEST(FiniteGroup, CyclicClosure) {
    for (int n : {1, 2, 4, 8, 90}) {
        const auto g = finite_group(GroupKind::Cyclic, n);
        EXPECT_EQ(g.size(), static_cast<std::size_t>(n));
        check_group(g);
    }
    check_group(finite_group("c6z"));
}

TEST(FiniteGroup, OctahedralIsSignedPermutations) {
    const auto g = finite_group("o24");
    ASSERT_EQ(g.size(), 24u);
    check_group(g);
    EXPECT_EQ(g.identity_index, 0u);
    // Independent enumeration of signed permutation matrices with det +1.
    int found = 0;
    std::array<int, 3> p{0, 1, 2};
    do {
        for (int s = 0; s < 8; ++s) {
            Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
            for (int r = 0; r < 3; ++r) m(r, p[r]) = (s >> r) & 1 ? -1.0 : 1.0;
            if (m.determinant() < 0) continue;
            ++found;
            EXPECT_TRUE(g.find(Rot3::from_matrix(m)).has_value());
        }
    } while (std::next_permutation(p.begin(), p.end()));
    EXPECT_EQ(found, 24);
}

TEST(FiniteGroup, IcosahedralClassEquation) {
    const auto g = finite_group("i60");
    ASSERT_EQ(g.size(), 60u);
    check_group(g);
    // Rotation angles: 1 identity, 24 of order five (12 at 72 and 12 at 144 deg),
    // 20 of order three, 15 half turns.
    std::map<long, int> counts;
    for (const auto& e : g.elements) counts[std::lround(geodesic_distance(e, Rot3{}) * 180.0 / kPi)]++;
    EXPECT_EQ(counts[0], 1);
    EXPECT_EQ(counts[72], 12);
    EXPECT_EQ(counts[144], 12);
    EXPECT_EQ(counts[120], 20);
    EXPECT_EQ(counts[180], 15);
}

TEST(FiniteGroup, NamesAndErrors) {
    EXPECT_EQ(finite_group("c4").name(), "c4");
    EXPECT_EQ(finite_group("c8z").name(), "c8z");
    EXPECT_EQ(finite_group("o24").name(), "o24");
    EXPECT_EQ(finite_group("i60").name(), "i60");
    EXPECT_THROW(finite_group("q7"), std::invalid_argument);
    EXPECT_THROW(finite_group(GroupKind::Cyclic, 0), std::invalid_argument);
}

TEST(RotationSet, InvariantsForEveryMethod) {
    std::vector<RotationSet> sets{
        sample_rotation_set(384, LowDiscrepancy{}, 0),
        sample_rotation_set(384, LowDiscrepancy{}, 7),
        sample_rotation_set(24, SubgroupSampling{finite_group("o24")}),
        sample_rotation_set(600, EulerGrid{}),
        sample_rotation_set(90, PlanarGrid{}),
        sample_rotation_set(1, SymmetrizedSampling{finite_group("o24"), true}),
    };
    for (const auto& s : sets) {
        double total = 0;
        for (double w : s.weights) {
            EXPECT_GT(w, 0.0);
            total += w;
        }
        EXPECT_NEAR(total, 1.0, 1e-12);
        EXPECT_EQ(s.provenance.m, s.size());
        for (std::size_t i = 0; i < s.size(); ++i)
            for (std::size_t j = i + 1; j < s.size(); ++j)
                ASSERT_GT(geodesic_distance(s.rotations[i], s.rotations[j]), 1e-9) << s.provenance.method;
    }
}

TEST(RotationSet, SingleSampleIsIdentity) {
    const auto s = sample_rotation_set(1, LowDiscrepancy{});
    ASSERT_EQ(s.size(), 1u);
    EXPECT_LT(geodesic_distance(s.rotations[0], Rot3{}), 1e-15);
}

TEST(RotationSet, DeterministicPerSeed) {
    const auto a = sample_rotation_set(100, LowDiscrepancy{}, 3);
    const auto b = sample_rotation_set(100, LowDiscrepancy{}, 3);
    const auto c = sample_rotation_set(100, LowDiscrepancy{}, 4);
    EXPECT_EQ(a.rotations, b.rotations);
    EXPECT_NE(a.rotations, c.rotations);
}

TEST(RotationSet, SubgroupSizeMismatchThrows) {
    EXPECT_THROW(sample_rotation_set(10, SubgroupSampling{finite_group("o24")}), std::invalid_argument);
    EXPECT_THROW(sample_rotation_set(0, LowDiscrepancy{}), std::invalid_argument);
}

TEST(RotationSet, EulerResolutionFactorsExactly) {
    const auto r = euler_grid_resolution(26244);
    EXPECT_EQ(static_cast<long>(r[0]) * r[1] * r[2], 26244);
    EXPECT_EQ(sample_rotation_set(26244, EulerGrid{}).size(), 26244u);
}

TEST(RotationSet, SymmetrizedIsClosed) {
    const auto g = finite_group("o24");
    const auto s = sample_rotation_set(1, SymmetrizedSampling{g, true}, 0);
    EXPECT_EQ(s.size(), 576u);
    for (const auto& a : g.elements)
        for (std::size_t i = 0; i < s.size(); i += 37) {
            EXPECT_TRUE(s.find(compose(a, s.rotations[i]), 1e-9).has_value());
            EXPECT_TRUE(s.find(compose(s.rotations[i], a), 1e-9).has_value());
        }
}

TEST(RotationSet, CoveringRadiusShrinksWithM) {
    const double r48 = covering_radius(sample_rotation_set(48, LowDiscrepancy{}), 2000, 1);
    const double r384 = covering_radius(sample_rotation_set(384, LowDiscrepancy{}), 2000, 1);
    EXPECT_LT(r384, r48);
    EXPECT_LT(r384, 0.6);
}
