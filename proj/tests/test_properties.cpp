// Randomized property checks. Each loop draws fresh inputs from a seeded
// generator; a failure message carries the trial index for replay.
#include "fourtran/bench.hpp"
#include "fourtran/correlation.hpp"
#include "fourtran/harmonic.hpp"
#include "fourtran/representations.hpp"
#include "fourtran/transporter.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace fourtran;
using testutil::max_diff;
using testutil::random_field;

namespace {

constexpr int kTrials = 40;

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(Property, GroupAxioms) {
    std::mt19937_64 rng(1001);
    for (int t = 0; t < kTrials; ++t) {
        for (int dim : {2, 3}) {
            const Rotation a = random_rotation(dim, rng), b = random_rotation(dim, rng), c = random_rotation(dim, rng);
            EXPECT_LT(geodesic_distance(compose(compose(a, b), c), compose(a, compose(b, c))), 1e-12) << t;
            EXPECT_LT(geodesic_distance(compose(a, inverse(a)), Rotation::identity(dim)), 1e-12) << t;
            EXPECT_LT(max_abs(compose(a, b).matrix() - a.matrix() * b.matrix()), 1e-12) << t;
            // Bi-invariant metric with triangle inequality.
            EXPECT_NEAR(geodesic_distance(compose(c, a), compose(c, b)), geodesic_distance(a, b), 1e-9) << t;
            EXPECT_NEAR(geodesic_distance(compose(a, c), compose(b, c)), geodesic_distance(a, b), 1e-9) << t;
            EXPECT_LE(geodesic_distance(a, c), geodesic_distance(a, b) + geodesic_distance(b, c) + 1e-12) << t;
        }
    }
}

TEST(Property, WignerHomomorphismAndOrthogonality) {
    std::mt19937_64 rng(1002);
    for (int t = 0; t < kTrials; ++t) {
        const int l = static_cast<int>(rng() % 9);
        const Rotation a = random_rotation(3, rng), b = random_rotation(3, rng);
        const auto da = wigner_d_real(l, a.spatial()), db = wigner_d_real(l, b.spatial());
        EXPECT_LT(max_abs(wigner_d_real(l, compose(a, b).spatial()) - da * db), 1e-10) << t;
        EXPECT_LT(max_abs(da * da.transpose() - Eigen::MatrixXd::Identity(2 * l + 1, 2 * l + 1)), 1e-11) << t;
    }
}

TEST(Property, SpectralRoundTripOnRandomBandLimitedSignals) {
    std::mt19937_64 rng(1003);
    const auto set = sample_rotation_set(384, LowDiscrepancy{});
    const SpectralBasis basis(3, 2);
    const FiberAnalysis analysis(set, basis);
    const FiberSynthesis synthesis(set, basis);
    for (int t = 0; t < kTrials; ++t) {
        std::vector<double> co(basis.size());
        for (double& v : co) v = testutil::uniform(rng, -1, 1);
        EXPECT_LT(max_diff(analysis.apply(synthesis.apply(co)), co), 1e-9) << t;
    }
}

TEST(Property, CorrelationLinearAndFftAgrees) {
    std::mt19937_64 rng(1004);
    for (int t = 0; t < kTrials / 4; ++t) {
        const int dim = 2 + static_cast<int>(rng() % 2);
        auto ext = [&](int lo, int hi) { return lo + static_cast<int>(rng() % static_cast<unsigned>(hi - lo + 1)); };
        const std::array<int, 3> fs{ext(3, 14), ext(3, 14), dim == 3 ? ext(3, 10) : 1};
        const std::array<int, 3> ks{2 * ext(0, 3) + 1, 2 * ext(0, 3) + 1, dim == 3 ? 2 * ext(0, 2) + 1 : 1};
        const int in = ext(1, 3), out = ext(1, 4);
        const auto f = random_field(Grid::make(dim, fs), in, rng);
        const auto g = random_field(Grid::make(dim, fs), in, rng);
        const auto k = random_field(Grid::make(dim, ks), in * out, rng);
        const KernelView kv{k.grid, in, out, k.data};
        const auto cf = correlate_fft(f, kv), cg = correlate_fft(g, kv);
        EXPECT_LT(max_diff(cf, correlate_direct(f, kv)), 1e-10) << t;
        auto h = f;
        for (std::size_t i = 0; i < h.data.size(); ++i) h.data[i] = 2.0 * f.data[i] - 0.5 * g.data[i];
        const auto ch = correlate_fft(h, kv);
        for (std::size_t i = 0; i < ch.size(); ++i) EXPECT_NEAR(ch[i], 2.0 * cf[i] - 0.5 * cg[i], 1e-10) << t;
    }
}

TEST(Property, PlanarPlaceLogitsAreRotationEquivariant) {
    // Rotating the scene by g moves each score to the rotated cell and to
    // rotation g R.
    std::mt19937_64 rng(1005);
    const auto set = sample_rotation_set(8, SubgroupSampling{finite_group("c8")});
    const auto c4 = finite_group("c4");
    for (int t = 0; t < kTrials / 4; ++t) {
        const auto o = random_field(Grid::make(2, {12, 12, 1}), 1, rng);
        const auto c = random_field(Grid::make(2, {5, 5, 1}), 1, rng);
        const auto base = decode_logits(place_logits(c, o, Encoder::blur(1.0), Encoder::identity(), set, 4), set);
        const Rotation& g = c4.elements[1 + rng() % 3];
        const auto og = rotate_field(o, g, RotationMode::ExactSubgroup);
        const auto rot = decode_logits(place_logits(c, og, Encoder::blur(1.0), Encoder::identity(), set, 4), set);
        double worst = 0;
        for (std::size_t cell = 0; cell < o.grid.cells(); ++cell) {
            const Cell v = rotate_cell(o.grid, g, o.grid.unflatten(cell));
            for (std::size_t i = 0; i < set.size(); ++i) {
                const std::size_t j = set.nearest(compose(g, set.rotations[i]));
                worst = std::max(worst, std::fabs(rot.at(o.grid.flat(v), j) - base.at(cell, i)));
            }
        }
        EXPECT_LT(worst, 1e-9) << t;
    }
}

TEST(Property, SoftmaxShiftAndArgmax) {
    std::mt19937_64 rng(1006);
    for (int t = 0; t < kTrials; ++t) {
        PoseDistribution p;
        p.grid = Grid::make(2, {1 + static_cast<int>(rng() % 9), 1 + static_cast<int>(rng() % 9), 1});
        p.rotations = sample_rotation_set(1 + rng() % 12, PlanarGrid{});
        p.scores.resize(p.grid.cells() * p.rotations.size());
        for (double& v : p.scores) v = testutil::uniform(rng, -50, 50);
        const auto a = softmax(p);
        auto q = p;
        const double shift = testutil::uniform(rng, -300, 300);
        for (double& v : q.scores) v += shift;
        EXPECT_LT(max_diff(softmax(q).scores, a.scores), 1e-13) << t;
        const Action x = argmax_action(a), y = argmax_action(p);
        EXPECT_EQ(x.cell, y.cell) << t;
        EXPECT_EQ(x.rotation_index, y.rotation_index) << t;
    }
}
