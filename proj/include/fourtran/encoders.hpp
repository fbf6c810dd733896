#pragma once

#include "fourtran/fields.hpp"

#include <nlohmann/json.hpp>

#include <vector>

namespace fourtran {

/// Fixed trivial-to-trivial encoder. Every kind commutes with grid rotations
/// because its taps depend only on the offset radius.
struct Encoder {
    enum class Kind { Identity, IsotropicBlur, LocalDensity, Compose };

    Kind kind = Kind::Identity;
    double param = 0.0;  // sigma (cells) for blur, radius (cells) for density
    std::vector<Encoder> parts;

    static Encoder identity() { return {}; }
    static Encoder blur(double sigma);
    static Encoder density(double radius);
    static Encoder compose(std::vector<Encoder> parts);
};

struct Tap {
    Cell offset;
    double weight;
};

/// Gaussian taps with radius <= 3 sigma renormalized to sum 1, or unit taps
/// on the closed ball of the given radius.
std::vector<Tap> encoder_taps(const Encoder& e, int dim);

ScalarField encode(const Encoder& e, const ScalarField& f);

nlohmann::json to_json(const Encoder& e);
Encoder encoder_from_json(const nlohmann::json& j);

}  // namespace fourtran
