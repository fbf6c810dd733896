#pragma once

#include <cmath>
#include <random>

namespace fourtran {

template <class Rng>
Rotation random_rotation(int dim, Rng& rng) {
    if (dim == 2) {
        std::uniform_real_distribution<double> angle(0.0, kTwoPi);
        return Rot2(angle(rng));
    }
    std::normal_distribution<double> normal;
    double w = 0, x = 0, y = 0, z = 0;
    do {
        w = normal(rng);
        x = normal(rng);
        y = normal(rng);
        z = normal(rng);
    } while (w * w + x * x + y * y + z * z < 1e-12);
    return Rot3(w, x, y, z);
}

}  // namespace fourtran
