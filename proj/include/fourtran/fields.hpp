#pragma once

#include "fourtran/group.hpp"
#include "fourtran/harmonic.hpp"
#include "fourtran/representations.hpp"

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace fourtran {

using Cell = std::array<int, 3>;

/// Regular 2D or 3D grid. Planar grids keep shape[2] == 1 so every index
/// computation is shared; axis 0 is the slowest in row-major order.
struct Grid {
    int dim = 3;
    std::array<int, 3> shape{1, 1, 1};
    double cell_size = 1.0;
    std::array<double, 3> origin{0.0, 0.0, 0.0};

    static Grid make(int dim, std::array<int, 3> shape, double cell_size = 1.0, std::array<double, 3> origin = {});

    std::size_t cells() const {
        return static_cast<std::size_t>(shape[0]) * static_cast<std::size_t>(shape[1]) * static_cast<std::size_t>(shape[2]);
    }
    std::size_t flat(const Cell& c) const {
        return (static_cast<std::size_t>(c[0]) * static_cast<std::size_t>(shape[1]) + static_cast<std::size_t>(c[1])) *
                   static_cast<std::size_t>(shape[2]) +
               static_cast<std::size_t>(c[2]);
    }
    Cell unflatten(std::size_t i) const;
    bool contains(const Cell& c) const;
    /// World coordinates of the cell center.
    std::array<double, 3> world(const Cell& c) const;
    /// Geometric center (s - 1) / 2 per axis, in index units.
    std::array<double, 3> center() const;
    bool same_geometry(const Grid& o) const;
};

/// Grid of trivial-type feature channels; data is cell-major, channel-fastest.
struct ScalarField {
    Grid grid;
    int channels = 1;
    std::vector<double> data;

    static ScalarField zeros(const Grid& grid, int channels = 1);

    double& at(std::size_t cell, int c = 0) { return data[cell * static_cast<std::size_t>(channels) + static_cast<std::size_t>(c)]; }
    double at(std::size_t cell, int c = 0) const {
        return data[cell * static_cast<std::size_t>(channels) + static_cast<std::size_t>(c)];
    }
    double& at(const Cell& cell, int c = 0) { return at(grid.flat(cell), c); }
    double at(const Cell& cell, int c = 0) const { return at(grid.flat(cell), c); }
};

/// Per-cell coefficient layout: SO(2) flat series (dim 2, band K) or
/// concatenated Wigner blocks (dim 3, band lmax).
struct FiberDescriptor {
    int dim = 3;
    int band = 0;

    std::size_t size() const { return basis().size(); }
    SpectralBasis basis() const { return {dim, band}; }
    /// Representation carried by one coefficient vector: sum_k So2Irrep(k)
    /// or sum_l (2l+1) D^l.
    RepSpec rep() const;
    static FiberDescriptor from_rep(const RepSpec& rep);

    friend bool operator==(const FiberDescriptor&, const FiberDescriptor&) = default;
};

/// Grid whose cells hold `groups` truncated Fourier coefficient vectors.
struct FourierField {
    Grid grid;
    FiberDescriptor fiber;
    int groups = 1;
    std::vector<double> data;

    static FourierField zeros(const Grid& grid, FiberDescriptor fiber, int groups = 1);

    std::size_t stride() const { return static_cast<std::size_t>(groups) * fiber.size(); }
    std::span<double> coeffs(std::size_t cell, int group = 0) {
        return {data.data() + cell * stride() + static_cast<std::size_t>(group) * fiber.size(), fiber.size()};
    }
    std::span<const double> coeffs(std::size_t cell, int group = 0) const {
        return {data.data() + cell * stride() + static_cast<std::size_t>(group) * fiber.size(), fiber.size()};
    }
};

/// Dynamic kernel from lifting plus fiber-space transform. Input type is
/// trivial per input channel (= group).
struct SteerableKernel {
    FourierField base;
    RepSpec input_type = RepSpec::trivial();
    RepSpec output_type;
    RotationSetProvenance lift;
};

enum class RotationMode {
    ExactSubgroup,  // signed permutation of grid cells, lossless
    Interpolated,   // multilinear, zero exterior
    Automatic,      // exact when the rotation permutes the grid, else interpolated
};

/// True when g maps cell centers onto cell centers of this grid.
bool is_grid_exact(const Grid& grid, const Rotation& g);

/// (beta(g) f)(x) = f(R(g)^-1 x) about the grid center.
ScalarField rotate_field(const ScalarField& f, const Rotation& g, RotationMode mode = RotationMode::Automatic);
/// Same resampling on raw cell-major data with `channels` values per cell.
std::vector<double> rotate_data(const Grid& grid, std::size_t channels, std::span<const double> data, const Rotation& g,
                                RotationMode mode);

/// Zero-padded window of odd `size` centered on `center_cell`.
ScalarField crop(const ScalarField& o, const Cell& center_cell, const std::array<int, 3>& size);

/// Channel block i holds rotate_field(f, set[i]); output has m * channels channels.
ScalarField lift(const ScalarField& f, const RotationSet& set);

/// Per cell and input channel, transforms the m lifted samples to band-limited
/// coefficients over SO(2) or SO(3).
SteerableKernel fiber_fourier(const ScalarField& lifted, const RotationSet& set, int band);

/// Relative error || beta(g) K - rho_out(g^-1) K || / || K ||.
double steerability_defect(const SteerableKernel& k, const Rotation& g, RotationMode mode = RotationMode::Automatic);

/// Applies rho(g) block-wise to one coefficient vector: D^l(g) * fhat^l for
/// SO(3) fibers, rotation by k theta on (a_k, b_k) for SO(2).
void rotate_fiber(const FiberDescriptor& fiber, const Rotation& g, std::span<double> coeffs);

/// "SFLD" container.
struct SfldHeader {
    Grid grid;
    std::uint32_t channels = 1;
    std::optional<RepSpec> fiber;
};
void write_sfld(std::ostream& out, const SfldHeader& header, std::span<const double> data);
std::pair<SfldHeader, std::vector<double>> read_sfld(std::istream& in);

void write_field(std::ostream& out, const ScalarField& f);
void write_field(std::ostream& out, const FourierField& f);
ScalarField read_scalar_field(std::istream& in);
FourierField read_fourier_field(std::istream& in);

}  // namespace fourtran
