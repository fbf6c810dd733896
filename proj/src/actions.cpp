#include "fourtran/actions.hpp"

#include "fourtran/harmonic.hpp"

#include <stdexcept>

namespace fourtran {

namespace {

template <class TargetFn>
std::optional<std::vector<std::size_t>> permutation(const RotationSet& set, TargetFn target) {
    std::vector<std::size_t> perm(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto j = set.find(target(set.rotations[i]));
        if (!j) return std::nullopt;
        perm[i] = *j;
    }
    return perm;
}

template <class TargetFn>
std::vector<double> act(std::span<const double> values, const RotationSet& set, const Rotation& g,
                        std::optional<int> band, TargetFn target) {
    if (values.size() != set.size()) throw std::invalid_argument("act: value count must match the rotation set");
    if (g.dim() != set.dim()) throw std::invalid_argument("act: rotation dimension mismatch");
    if (const auto perm = permutation(set, target)) {
        std::vector<double> out(values.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = values[(*perm)[i]];
        return out;
    }
    if (!band)
        throw std::invalid_argument("act: rotation set is not closed under the action and no Fourier band was given");
    const SpectralBasis basis(set.dim(), *band);
    const FiberAnalysis analysis(set, basis);
    const auto coeffs = analysis.apply(values);
    std::vector<double> out(values.size());
    std::vector<double> row(basis.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        basis.evaluate(target(set.rotations[i]), row);
        double v = 0.0;
        for (std::size_t c = 0; c < row.size(); ++c) v += row[c] * coeffs[c];
        out[i] = v;
    }
    return out;
}

}  // namespace

std::optional<std::vector<std::size_t>> left_action_permutation(const RotationSet& set, const Rotation& g) {
    const Rotation gi = inverse(g);
    return permutation(set, [&](const Rotation& h) { return compose(gi, h); });
}

std::optional<std::vector<std::size_t>> right_action_permutation(const RotationSet& set, const Rotation& g) {
    const Rotation gi = inverse(g);
    return permutation(set, [&](const Rotation& h) { return compose(h, gi); });
}

std::vector<double> act_left(std::span<const double> values, const RotationSet& set, const Rotation& g,
                             std::optional<int> fourier_band) {
    const Rotation gi = inverse(g);
    return act(values, set, g, fourier_band, [&](const Rotation& h) { return compose(gi, h); });
}

std::vector<double> act_right(std::span<const double> values, const RotationSet& set, const Rotation& g,
                              std::optional<int> fourier_band) {
    const Rotation gi = inverse(g);
    return act(values, set, g, fourier_band, [&](const Rotation& h) { return compose(h, gi); });
}

}  // namespace fourtran
