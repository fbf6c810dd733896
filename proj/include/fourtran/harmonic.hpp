#pragma once

#include "fourtran/group.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

namespace fourtran {

/// Truncated real Fourier series on SO(2): sum_k a_k cos(k t) + b_k sin(k t).
struct FourierCoeffs2 {
    int K = 0;
    std::vector<double> a;  // K + 1 entries
    std::vector<double> b;  // K + 1 entries, b[0] == 0

    static FourierCoeffs2 zeros(int K);
    /// Flat layout [a0, a1, b1, a2, b2, ...], 2K + 1 entries.
    std::vector<double> flat() const;
    static FourierCoeffs2 from_flat(std::span<const double> v);
};

/// Truncated real Wigner expansion on SO(3):
/// f(g) = sum_l sum_{k,k'} fhat^l_{kk'} D^l_{kk'}(g).
struct FourierCoeffs3 {
    int lmax = 0;
    /// Concatenated row-major (2l+1)x(2l+1) blocks, l = 0..lmax.
    std::vector<double> data;

    static FourierCoeffs3 zeros(int lmax);
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> block(int l);
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> block(int l) const;
};

constexpr std::size_t so2_coeff_count(int K) { return 2 * static_cast<std::size_t>(K) + 1; }
/// sum_{l <= lmax} (2l+1)^2.
constexpr std::size_t so3_coeff_count(int lmax) {
    const auto L = static_cast<std::size_t>(lmax);
    return (L + 1) * (2 * L + 1) * (2 * L + 3) / 3;
}
constexpr std::size_t so3_block_offset(int l) { return l == 0 ? 0 : so3_coeff_count(l - 1); }

/// Raised when a sample set cannot support the requested band limit.
class TransformError : public std::invalid_argument {
public:
    TransformError(const std::string& what, RotationSetProvenance provenance)
        : std::invalid_argument(what), provenance_(std::move(provenance)) {}
    const RotationSetProvenance& provenance() const { return provenance_; }

private:
    RotationSetProvenance provenance_;
};

/// Band-limited basis on SO(2) (dim 2, band = K) or SO(3) (dim 3, band = lmax).
/// Rows are laid out as FourierCoeffs2::flat() or FourierCoeffs3::data.
class SpectralBasis {
public:
    SpectralBasis(int dim, int band);
    static SpectralBasis so2(int K) { return {2, K}; }
    static SpectralBasis so3(int lmax) { return {3, lmax}; }

    int dim() const { return dim_; }
    int band() const { return band_; }
    std::size_t size() const { return dim_ == 2 ? so2_coeff_count(band_) : so3_coeff_count(band_); }

    void evaluate(const Rotation& g, std::span<double> row) const;
    /// m x size() matrix of basis functions at each rotation.
    Eigen::MatrixXd design(const RotationSet& set) const;

    friend bool operator==(const SpectralBasis&, const SpectralBasis&) = default;

private:
    int dim_;
    int band_;
};

/// Forward transform plan (samples on a fixed set -> coefficients).
///
/// On a uniform planar grid this is the exact DFT projection; otherwise it is
/// the ridge-regularized least-squares inverse of synthesis (lambda = 1e-10).
class FiberAnalysis {
public:
    static constexpr double kRidge = 1e-10;
    static constexpr double kMaxCondition = 1e8;

    FiberAnalysis(const RotationSet& set, SpectralBasis basis);

    const SpectralBasis& basis() const { return basis_; }
    std::size_t samples() const { return static_cast<std::size_t>(projector_.cols()); }
    /// size() x m.
    const Eigen::MatrixXd& projector() const { return projector_; }
    double condition_number() const { return condition_; }

    void apply(std::span<const double> samples, std::span<double> coeffs) const;
    std::vector<double> apply(std::span<const double> samples) const;

private:
    SpectralBasis basis_;
    Eigen::MatrixXd projector_;
    double condition_ = 1.0;
};

/// Inverse transform plan (coefficients -> values on a fixed set).
class FiberSynthesis {
public:
    FiberSynthesis(const RotationSet& set, SpectralBasis basis);

    const SpectralBasis& basis() const { return basis_; }
    std::size_t samples() const { return static_cast<std::size_t>(design_.rows()); }
    const Eigen::MatrixXd& design() const { return design_; }

    void apply(std::span<const double> coeffs, std::span<double> values) const;
    std::vector<double> apply(std::span<const double> coeffs) const;

private:
    SpectralBasis basis_;
    Eigen::MatrixXd design_;
};

/// True when the set is {2 pi i / n} in index order.
bool is_uniform_planar_grid(const RotationSet& set);

/// DFT projection of samples at angles 2 pi i / n, requires 2K <= n.
FourierCoeffs2 so2_forward(std::span<const double> samples, int K);
std::vector<double> so2_inverse(const FourierCoeffs2& coeffs, std::span<const double> angles);

FourierCoeffs3 so3_forward(std::span<const double> samples, const RotationSet& set, int lmax);
std::vector<double> so3_inverse(const FourierCoeffs3& coeffs, const RotationSet& set);
double so3_inverse(const FourierCoeffs3& coeffs, const Rotation& g);

/// Block-wise D^l(g) * fhat^l: coefficients of h -> f(g^-1 h).
FourierCoeffs3 rotate_left(const FourierCoeffs3& coeffs, const Rotation& g);
/// Block-wise fhat^l * D^l(g): coefficients of h -> f(h g^-1).
FourierCoeffs3 rotate_right(const FourierCoeffs3& coeffs, const Rotation& g);

/// Binary layout: u32 lmax, then blocks as little-endian f32.
void write_coeffs3(std::ostream& out, const FourierCoeffs3& coeffs);
FourierCoeffs3 read_coeffs3(std::istream& in);

}  // namespace fourtran
