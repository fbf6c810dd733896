#include "fourtran/encoders.hpp"

#include "fourtran/parallel.hpp"

#include <cmath>
#include <stdexcept>

namespace fourtran {

Encoder Encoder::blur(double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("Encoder::blur: sigma must be positive");
    return {Kind::IsotropicBlur, sigma, {}};
}

Encoder Encoder::density(double radius) {
    if (!(radius >= 0.0)) throw std::invalid_argument("Encoder::density: radius must be non-negative");
    return {Kind::LocalDensity, radius, {}};
}

Encoder Encoder::compose(std::vector<Encoder> parts) { return {Kind::Compose, 0.0, std::move(parts)}; }

std::vector<Tap> encoder_taps(const Encoder& e, int dim) {
    if (e.kind == Encoder::Kind::Identity) return {{{0, 0, 0}, 1.0}};
    if (e.kind == Encoder::Kind::Compose) throw std::invalid_argument("encoder_taps: composite encoders have no single tap set");
    const double radius = e.kind == Encoder::Kind::IsotropicBlur ? 3.0 * e.param : e.param;
    const int r = static_cast<int>(std::floor(radius + 1e-12));
    const int rz = dim == 3 ? r : 0;
    std::vector<Tap> taps;
    double total = 0.0;
    for (int i = -r; i <= r; ++i)
        for (int j = -r; j <= r; ++j)
            for (int k = -rz; k <= rz; ++k) {
                const double d2 = static_cast<double>(i * i + j * j + k * k);
                if (d2 > radius * radius + 1e-9) continue;
                const double w = e.kind == Encoder::Kind::IsotropicBlur ? std::exp(-d2 / (2.0 * e.param * e.param)) : 1.0;
                taps.push_back({{i, j, k}, w});
                total += w;
            }
    if (e.kind == Encoder::Kind::IsotropicBlur)
        for (auto& t : taps) t.weight /= total;
    return taps;
}

namespace {

ScalarField apply_taps(const std::vector<Tap>& taps, const ScalarField& f) {
    ScalarField out = ScalarField::zeros(f.grid, f.channels);
    const auto& s = f.grid.shape;
    const auto ch = static_cast<std::size_t>(f.channels);
    parallel_for(static_cast<std::size_t>(s[0]), [&](std::size_t i0) {
        for (int i1 = 0; i1 < s[1]; ++i1)
            for (int i2 = 0; i2 < s[2]; ++i2) {
                const Cell p{static_cast<int>(i0), i1, i2};
                const std::size_t dst = f.grid.flat(p) * ch;
                for (const auto& t : taps) {
                    const Cell q{p[0] + t.offset[0], p[1] + t.offset[1], p[2] + t.offset[2]};
                    if (!f.grid.contains(q)) continue;
                    const std::size_t src = f.grid.flat(q) * ch;
                    for (std::size_t c = 0; c < ch; ++c) out.data[dst + c] += t.weight * f.data[src + c];
                }
            }
    });
    return out;
}

}  // namespace

ScalarField encode(const Encoder& e, const ScalarField& f) {
    switch (e.kind) {
        case Encoder::Kind::Identity: return f;
        case Encoder::Kind::Compose: {
            ScalarField cur = f;
            for (const auto& part : e.parts) cur = encode(part, cur);
            return cur;
        }
        default: return apply_taps(encoder_taps(e, f.grid.dim), f);
    }
}

nlohmann::json to_json(const Encoder& e) {
    switch (e.kind) {
        case Encoder::Kind::Identity: return {{"identity", true}};
        case Encoder::Kind::IsotropicBlur: return {{"blur", e.param}};
        case Encoder::Kind::LocalDensity: return {{"density", e.param}};
        case Encoder::Kind::Compose: {
            nlohmann::json parts = nlohmann::json::array();
            for (const auto& p : e.parts) parts.push_back(to_json(p));
            return {{"compose", parts}};
        }
    }
    return {};
}

Encoder encoder_from_json(const nlohmann::json& j) {
    if (j.is_object()) {
        if (j.contains("identity")) return Encoder::identity();
        if (j.contains("blur")) return Encoder::blur(j.at("blur").get<double>());
        if (j.contains("density")) return Encoder::density(j.at("density").get<double>());
        if (j.contains("compose")) {
            std::vector<Encoder> parts;
            for (const auto& p : j.at("compose")) parts.push_back(encoder_from_json(p));
            return Encoder::compose(std::move(parts));
        }
    }
    throw std::invalid_argument("encoder_from_json: unknown encoder " + j.dump());
}

}  // namespace fourtran
