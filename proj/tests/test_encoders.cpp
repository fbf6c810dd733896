#include "fourtran/encoders.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <functional>

using namespace fourtran;
using testutil::max_diff;
using testutil::random_field;

namespace {

// Oracle: brute-force neighborhood sum with explicit weights.
ScalarField apply_weights(const ScalarField& f, int reach, const std::function<double(int, int, int)>& w) {
    ScalarField out = ScalarField::zeros(f.grid, f.channels);
    const int rz = f.grid.dim == 3 ? reach : 0;
    for (std::size_t i = 0; i < f.grid.cells(); ++i) {
        const Cell v = f.grid.unflatten(i);
        for (int a = -reach; a <= reach; ++a)
            for (int b = -reach; b <= reach; ++b)
                for (int c = -rz; c <= rz; ++c) {
                    const Cell u{v[0] + a, v[1] + b, v[2] + c};
                    if (!f.grid.contains(u)) continue;
                    const double wt = w(a, b, c);
                    for (int ch = 0; ch < f.channels; ++ch) out.at(i, ch) += wt * f.at(u, ch);
                }
    }
    return out;
}

}  // namespace

TEST(Encoder, IdentityIsNoOp) {
    std::mt19937_64 rng(41);
    const auto f = random_field(Grid::make(3, {4, 5, 6}), 2, rng);
    EXPECT_EQ(encode(Encoder::identity(), f).data, f.data);
}

TEST(Encoder, DensityMatchesBallCount) {
    std::mt19937_64 rng(42);
    const auto f = random_field(Grid::make(3, {7, 6, 8}), 1, rng);
    const double r = 1.5;
    const auto expect = apply_weights(f, 1, [&](int a, int b, int c) { return a * a + b * b + c * c <= r * r ? 1.0 : 0.0; });
    EXPECT_LT(max_diff(encode(Encoder::density(r), f).data, expect.data), 1e-12);
    EXPECT_EQ(encoder_taps(Encoder::density(r), 3).size(), 19u);  // 1 + 6 + 12
    EXPECT_EQ(encoder_taps(Encoder::density(1.0), 2).size(), 5u);
}

TEST(Encoder, BlurTapsNormalizedGaussian) {
    const double sigma = 0.8;
    for (int dim : {2, 3}) {
        const auto taps = encoder_taps(Encoder::blur(sigma), dim);
        double sum = 0;
        for (const auto& t : taps) {
            sum += t.weight;
            const double r2 = t.offset[0] * t.offset[0] + t.offset[1] * t.offset[1] + t.offset[2] * t.offset[2];
            EXPECT_LE(std::sqrt(r2), 3 * sigma + 1e-12);
            EXPECT_GT(t.weight, 0.0);
        }
        EXPECT_NEAR(sum, 1.0, 1e-14);
        // Ratio of weights follows exp(-r^2 / 2 sigma^2).
        double w0 = 0, w1 = 0;
        for (const auto& t : taps) {
            if (t.offset == Cell{0, 0, 0}) w0 = t.weight;
            if (t.offset == Cell{1, 0, 0}) w1 = t.weight;
        }
        EXPECT_NEAR(w1 / w0, std::exp(-1.0 / (2 * sigma * sigma)), 1e-13);
    }
}

TEST(Encoder, BlurMatchesBruteForce2D) {
    std::mt19937_64 rng(43);
    const auto f = random_field(Grid::make(2, {9, 7, 1}), 3, rng);
    const double sigma = 1.0;
    double norm = 0;
    for (int a = -3; a <= 3; ++a)
        for (int b = -3; b <= 3; ++b)
            if (a * a + b * b <= 9) norm += std::exp(-(a * a + b * b) / 2.0);
    const auto expect = apply_weights(f, 3, [&](int a, int b, int) {
        return a * a + b * b <= 9 ? std::exp(-(a * a + b * b) / 2.0) / norm : 0.0;
    });
    EXPECT_LT(max_diff(encode(Encoder::blur(sigma), f).data, expect.data), 1e-12);
}

TEST(Encoder, CommutesWithGridRotations) {
    std::mt19937_64 rng(44);
    const auto f = random_field(Grid::make(3, {7, 7, 7}), 1, rng);
    const auto cube = finite_group("o24");
    for (const auto& e : {Encoder::blur(1.0), Encoder::density(1.8),
                          Encoder::compose({Encoder::density(1.0), Encoder::blur(0.7)})})
        for (std::size_t i = 0; i < cube.size(); i += 3) {
            const auto& g = cube.elements[i];
            const auto a = encode(e, rotate_field(f, g, RotationMode::ExactSubgroup));
            const auto b = rotate_field(encode(e, f), g, RotationMode::ExactSubgroup);
            EXPECT_LT(max_diff(a.data, b.data), 1e-12);
        }
}

TEST(Encoder, ComposeAppliesInOrder) {
    std::mt19937_64 rng(45);
    const auto f = random_field(Grid::make(2, {8, 8, 1}), 1, rng);
    const auto a = Encoder::density(1.0), b = Encoder::blur(0.9);
    EXPECT_LT(max_diff(encode(Encoder::compose({a, b}), f).data, encode(b, encode(a, f)).data), 1e-14);
}

TEST(Encoder, JsonRoundTripAndErrors) {
    const auto e = Encoder::compose({Encoder::identity(), Encoder::density(2.0), Encoder::blur(1.5)});
    const auto back = encoder_from_json(to_json(e));
    ASSERT_EQ(back.parts.size(), 3u);
    EXPECT_EQ(back.parts[1].kind, Encoder::Kind::LocalDensity);
    EXPECT_DOUBLE_EQ(back.parts[2].param, 1.5);
    EXPECT_THROW(Encoder::blur(0.0), std::invalid_argument);
    EXPECT_THROW(encoder_from_json(nlohmann::json{{"kind", "sharpen"}}), std::invalid_argument);
}
