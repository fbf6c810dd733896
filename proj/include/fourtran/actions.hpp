#pragma once

#include "fourtran/group.hpp"

#include <optional>
#include <span>
#include <vector>

namespace fourtran {

/// Samples of h -> f(g^-1 h) over the same set.
///
/// When the set is closed under left multiplication by g the result is an
/// exact permutation of `values`. Otherwise `fourier_band` (K or lmax) selects
/// a band-limited re-evaluation through the forward transform; without it the
/// call throws std::invalid_argument.
std::vector<double> act_left(std::span<const double> values, const RotationSet& set, const Rotation& g,
                             std::optional<int> fourier_band = std::nullopt);

/// Samples of h -> f(h g^-1); mirror of act_left.
std::vector<double> act_right(std::span<const double> values, const RotationSet& set, const Rotation& g,
                              std::optional<int> fourier_band = std::nullopt);

/// Index map i -> j with set[j] == g^-1 set[i] (left) or set[i] g^-1 (right),
/// if the set is closed under that action.
std::optional<std::vector<std::size_t>> left_action_permutation(const RotationSet& set, const Rotation& g);
std::optional<std::vector<std::size_t>> right_action_permutation(const RotationSet& set, const Rotation& g);

}  // namespace fourtran
