#include "fourtran/harmonic.hpp"

#include "fourtran/binary_io.hpp"
#include "fourtran/parallel.hpp"
#include "fourtran/representations.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace fourtran {

FourierCoeffs2 FourierCoeffs2::zeros(int K) {
    if (K < 0) throw std::invalid_argument("FourierCoeffs2: K must be non-negative");
    FourierCoeffs2 c;
    c.K = K;
    c.a.assign(static_cast<std::size_t>(K) + 1, 0.0);
    c.b.assign(static_cast<std::size_t>(K) + 1, 0.0);
    return c;
}

std::vector<double> FourierCoeffs2::flat() const {
    std::vector<double> v(so2_coeff_count(K));
    v[0] = a[0];
    for (int k = 1; k <= K; ++k) {
        v[2 * k - 1] = a[static_cast<std::size_t>(k)];
        v[2 * k] = b[static_cast<std::size_t>(k)];
    }
    return v;
}

FourierCoeffs2 FourierCoeffs2::from_flat(std::span<const double> v) {
    if (v.empty() || v.size() % 2 == 0) throw std::invalid_argument("FourierCoeffs2::from_flat: length must be 2K + 1");
    auto c = zeros(static_cast<int>(v.size() / 2));
    c.a[0] = v[0];
    for (int k = 1; k <= c.K; ++k) {
        c.a[static_cast<std::size_t>(k)] = v[2 * k - 1];
        c.b[static_cast<std::size_t>(k)] = v[2 * k];
    }
    return c;
}

FourierCoeffs3 FourierCoeffs3::zeros(int lmax) {
    if (lmax < 0) throw std::invalid_argument("FourierCoeffs3: lmax must be non-negative");
    FourierCoeffs3 c;
    c.lmax = lmax;
    c.data.assign(so3_coeff_count(lmax), 0.0);
    return c;
}

Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> FourierCoeffs3::block(int l) {
    const int n = 2 * l + 1;
    return {data.data() + so3_block_offset(l), n, n};
}

Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> FourierCoeffs3::block(
    int l) const {
    const int n = 2 * l + 1;
    return {data.data() + so3_block_offset(l), n, n};
}

// ---------------------------------------------------------------------------

SpectralBasis::SpectralBasis(int dim, int band) : dim_(dim), band_(band) {
    if (dim != 2 && dim != 3) throw std::invalid_argument("SpectralBasis: dim must be 2 or 3");
    if (band < 0) throw std::invalid_argument("SpectralBasis: band must be non-negative");
    if (dim == 3 && band > kMaxWignerOrder) throw std::invalid_argument("SpectralBasis: lmax too large");
}

void SpectralBasis::evaluate(const Rotation& g, std::span<double> row) const {
    if (g.dim() != dim_) throw std::invalid_argument("SpectralBasis::evaluate: rotation dimension mismatch");
    if (row.size() != size()) throw std::invalid_argument("SpectralBasis::evaluate: row size mismatch");
    if (dim_ == 2) {
        const double t = g.planar().theta();
        row[0] = 1.0;
        for (int k = 1; k <= band_; ++k) {
            row[static_cast<std::size_t>(2 * k - 1)] = std::cos(k * t);
            row[static_cast<std::size_t>(2 * k)] = std::sin(k * t);
        }
        return;
    }
    const auto blocks = wigner_d_real_all(band_, g.spatial());
    std::size_t at = 0;
    for (const auto& b : blocks)
        for (Eigen::Index i = 0; i < b.rows(); ++i)
            for (Eigen::Index j = 0; j < b.cols(); ++j) row[at++] = b(i, j);
}

Eigen::MatrixXd SpectralBasis::design(const RotationSet& set) const {
    const auto m = set.size();
    const auto n = size();
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> a(m, n);
    constexpr std::size_t chunk = 256;
    parallel_for((m + chunk - 1) / chunk, [&](std::size_t c) {
        for (std::size_t i = c * chunk; i < std::min(m, (c + 1) * chunk); ++i)
            evaluate(set.rotations[i], std::span<double>(a.data() + i * n, n));
    });
    return a;
}

bool is_uniform_planar_grid(const RotationSet& set) {
    const auto n = set.size();
    if (n == 0 || set.dim() != 2) return false;
    for (std::size_t i = 0; i < n; ++i) {
        const double expected = kTwoPi * static_cast<double>(i) / static_cast<double>(n);
        if (geodesic_distance(set.rotations[i], Rot2(expected)) > 1e-12) return false;
    }
    return true;
}

namespace {

Eigen::MatrixXd dft_projector(std::size_t n, int K) {
    if (2 * static_cast<std::size_t>(K) > n)
        throw std::invalid_argument("so2_forward: " + std::to_string(n) + " samples cannot resolve K = " +
                                    std::to_string(K));
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(so2_coeff_count(K)), static_cast<Eigen::Index>(n));
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto col = static_cast<Eigen::Index>(i);
        p(0, col) = inv_n;
        for (int k = 1; k <= K; ++k) {
            // Integer phase index keeps cos/sin of the grid angles exact-periodic.
            const auto phase = static_cast<double>((static_cast<std::size_t>(k) * i) % n);
            const double t = kTwoPi * phase * inv_n;
            const bool nyquist = 2 * static_cast<std::size_t>(k) == n;
            p(2 * k - 1, col) = (nyquist ? 1.0 : 2.0) * inv_n * std::cos(t);
            p(2 * k, col) = nyquist ? 0.0 : 2.0 * inv_n * std::sin(t);
        }
    }
    return p;
}

}  // namespace

FiberAnalysis::FiberAnalysis(const RotationSet& set, SpectralBasis basis) : basis_(basis) {
    if (set.dim() != basis.dim()) throw std::invalid_argument("FiberAnalysis: rotation set dimension mismatch");
    if (basis.dim() == 2 && is_uniform_planar_grid(set)) {
        if (2 * static_cast<std::size_t>(basis.band()) > set.size())
            throw TransformError("FiberAnalysis: " + std::to_string(set.size()) + " planar samples cannot resolve K = " +
                                     std::to_string(basis.band()),
                                 set.provenance);
        projector_ = dft_projector(set.size(), basis.band());
        return;
    }
    const auto m = set.size();
    const auto n = basis.size();
    if (m < n)
        throw TransformError("FiberAnalysis: underdetermined transform (" + std::to_string(m) + " samples for " +
                                 std::to_string(n) + " coefficients) on set " + set.provenance.method,
                             set.provenance);
    const Eigen::MatrixXd a = basis.design(set);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const auto& sv = svd.singularValues();
    condition_ = sv(sv.size() - 1) > 0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
    if (!(condition_ <= kMaxCondition))
        throw TransformError("FiberAnalysis: ill-conditioned design matrix (condition " + std::to_string(condition_) +
                                 ") on set " + set.provenance.method + " m=" + std::to_string(set.provenance.m) +
                                 " seed=" + std::to_string(set.provenance.seed),
                             set.provenance);
    Eigen::MatrixXd normal = a.transpose() * a;
    normal.diagonal().array() += kRidge;
    projector_ = normal.ldlt().solve(a.transpose());
}

void FiberAnalysis::apply(std::span<const double> samples, std::span<double> coeffs) const {
    if (samples.size() != this->samples() || coeffs.size() != basis_.size())
        throw std::invalid_argument("FiberAnalysis::apply: size mismatch");
    Eigen::Map<const Eigen::VectorXd> s(samples.data(), static_cast<Eigen::Index>(samples.size()));
    Eigen::Map<Eigen::VectorXd> c(coeffs.data(), static_cast<Eigen::Index>(coeffs.size()));
    c.noalias() = projector_ * s;
}

std::vector<double> FiberAnalysis::apply(std::span<const double> samples) const {
    std::vector<double> out(basis_.size());
    apply(samples, out);
    return out;
}

FiberSynthesis::FiberSynthesis(const RotationSet& set, SpectralBasis basis)
    : basis_(basis), design_(basis.design(set)) {}

void FiberSynthesis::apply(std::span<const double> coeffs, std::span<double> values) const {
    if (coeffs.size() != basis_.size() || values.size() != samples())
        throw std::invalid_argument("FiberSynthesis::apply: size mismatch");
    Eigen::Map<const Eigen::VectorXd> c(coeffs.data(), static_cast<Eigen::Index>(coeffs.size()));
    Eigen::Map<Eigen::VectorXd> v(values.data(), static_cast<Eigen::Index>(values.size()));
    v.noalias() = design_ * c;
}

std::vector<double> FiberSynthesis::apply(std::span<const double> coeffs) const {
    std::vector<double> out(samples());
    apply(coeffs, out);
    return out;
}

// ---------------------------------------------------------------------------

FourierCoeffs2 so2_forward(std::span<const double> samples, int K) {
    if (K < 0) throw std::invalid_argument("so2_forward: K must be non-negative");
    const Eigen::MatrixXd p = dft_projector(samples.size(), K);
    Eigen::Map<const Eigen::VectorXd> s(samples.data(), static_cast<Eigen::Index>(samples.size()));
    const Eigen::VectorXd flat = p * s;
    return FourierCoeffs2::from_flat(std::span<const double>(flat.data(), static_cast<std::size_t>(flat.size())));
}

std::vector<double> so2_inverse(const FourierCoeffs2& coeffs, std::span<const double> angles) {
    std::vector<double> out(angles.size());
    for (std::size_t i = 0; i < angles.size(); ++i) {
        double v = coeffs.a[0];
        for (int k = 1; k <= coeffs.K; ++k)
            v += coeffs.a[static_cast<std::size_t>(k)] * std::cos(k * angles[i]) +
                 coeffs.b[static_cast<std::size_t>(k)] * std::sin(k * angles[i]);
        out[i] = v;
    }
    return out;
}

FourierCoeffs3 so3_forward(std::span<const double> samples, const RotationSet& set, int lmax) {
    if (samples.size() != set.size()) throw std::invalid_argument("so3_forward: sample count must match the set");
    const FiberAnalysis plan(set, SpectralBasis::so3(lmax));
    FourierCoeffs3 c = FourierCoeffs3::zeros(lmax);
    plan.apply(samples, c.data);
    return c;
}

std::vector<double> so3_inverse(const FourierCoeffs3& coeffs, const RotationSet& set) {
    const FiberSynthesis plan(set, SpectralBasis::so3(coeffs.lmax));
    return plan.apply(coeffs.data);
}

double so3_inverse(const FourierCoeffs3& coeffs, const Rotation& g) {
    const SpectralBasis basis = SpectralBasis::so3(coeffs.lmax);
    std::vector<double> row(basis.size());
    basis.evaluate(g, row);
    double v = 0.0;
    for (std::size_t i = 0; i < row.size(); ++i) v += row[i] * coeffs.data[i];
    return v;
}

FourierCoeffs3 rotate_left(const FourierCoeffs3& coeffs, const Rotation& g) {
    const auto d = wigner_d_real_all(coeffs.lmax, g.spatial());
    FourierCoeffs3 out = FourierCoeffs3::zeros(coeffs.lmax);
    for (int l = 0; l <= coeffs.lmax; ++l) out.block(l) = d[static_cast<std::size_t>(l)] * coeffs.block(l);
    return out;
}

FourierCoeffs3 rotate_right(const FourierCoeffs3& coeffs, const Rotation& g) {
    const auto d = wigner_d_real_all(coeffs.lmax, g.spatial());
    FourierCoeffs3 out = FourierCoeffs3::zeros(coeffs.lmax);
    for (int l = 0; l <= coeffs.lmax; ++l) out.block(l) = coeffs.block(l) * d[static_cast<std::size_t>(l)];
    return out;
}

void write_coeffs3(std::ostream& out, const FourierCoeffs3& coeffs) {
    binary::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(coeffs.lmax));
    for (double v : coeffs.data) binary::write_le<float>(out, static_cast<float>(v));
}

FourierCoeffs3 read_coeffs3(std::istream& in) {
    const auto lmax = binary::read_le<std::uint32_t>(in);
    if (lmax > static_cast<std::uint32_t>(kMaxWignerOrder)) throw std::runtime_error("read_coeffs3: lmax out of range");
    FourierCoeffs3 c = FourierCoeffs3::zeros(static_cast<int>(lmax));
    for (double& v : c.data) v = binary::read_le<float>(in);
    return c;
}

}  // namespace fourtran
