#include "fourtran/fields.hpp"

#include "fourtran/binary_io.hpp"
#include "fourtran/parallel.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace fourtran {

Grid Grid::make(int dim, std::array<int, 3> shape, double cell_size, std::array<double, 3> origin) {
    if (dim != 2 && dim != 3) throw std::invalid_argument("Grid: dim must be 2 or 3");
    if (dim == 2) {
        shape[2] = 1;
        origin[2] = 0.0;
    }
    for (int s : shape)
        if (s < 1) throw std::invalid_argument("Grid: extents must be positive");
    if (!(cell_size > 0.0)) throw std::invalid_argument("Grid: cell_size must be positive");
    return Grid{dim, shape, cell_size, origin};
}

Cell Grid::unflatten(std::size_t i) const {
    const auto s2 = static_cast<std::size_t>(shape[2]);
    const auto s1 = static_cast<std::size_t>(shape[1]);
    return {static_cast<int>(i / (s1 * s2)), static_cast<int>((i / s2) % s1), static_cast<int>(i % s2)};
}

bool Grid::contains(const Cell& c) const {
    for (int a = 0; a < 3; ++a)
        if (c[a] < 0 || c[a] >= shape[a]) return false;
    return true;
}

std::array<double, 3> Grid::world(const Cell& c) const {
    std::array<double, 3> w{};
    for (int a = 0; a < dim; ++a) w[a] = origin[a] + c[a] * cell_size;
    return w;
}

std::array<double, 3> Grid::center() const {
    return {(shape[0] - 1) / 2.0, (shape[1] - 1) / 2.0, (shape[2] - 1) / 2.0};
}

bool Grid::same_geometry(const Grid& o) const { return dim == o.dim && shape == o.shape; }

ScalarField ScalarField::zeros(const Grid& grid, int channels) {
    if (channels < 1) throw std::invalid_argument("ScalarField: channels must be positive");
    return ScalarField{grid, channels, std::vector<double>(grid.cells() * static_cast<std::size_t>(channels), 0.0)};
}

RepSpec FiberDescriptor::rep() const {
    std::vector<RepSpec::Term> terms;
    for (int k = 0; k <= band; ++k) {
        if (dim == 2)
            terms.emplace_back(RepSpec::so2_irrep(k), 1);
        else
            terms.emplace_back(RepSpec::wigner(k), 2 * k + 1);
    }
    return RepSpec::direct_sum(std::move(terms));
}

FiberDescriptor FiberDescriptor::from_rep(const RepSpec& rep) {
    if (rep.kind() != RepSpec::Kind::DirectSum || rep.terms().empty())
        throw std::invalid_argument("FiberDescriptor: expected a direct sum of irreps");
    const auto& terms = rep.terms();
    const bool planar = terms.front().first.kind() == RepSpec::Kind::So2Irrep;
    for (std::size_t k = 0; k < terms.size(); ++k) {
        const auto& [sub, mult] = terms[k];
        const bool ok = planar ? (sub.kind() == RepSpec::Kind::So2Irrep && sub.param() == static_cast<int>(k) && mult == 1)
                               : (sub.kind() == RepSpec::Kind::WignerD && sub.param() == static_cast<int>(k) &&
                                  mult == 2 * static_cast<int>(k) + 1);
        if (!ok) throw std::invalid_argument("FiberDescriptor: unsupported fiber representation " + to_json(rep).dump());
    }
    return FiberDescriptor{planar ? 2 : 3, static_cast<int>(terms.size()) - 1};
}

FourierField FourierField::zeros(const Grid& grid, FiberDescriptor fiber, int groups) {
    if (groups < 1) throw std::invalid_argument("FourierField: groups must be positive");
    FourierField f{grid, fiber, groups, {}};
    f.data.assign(grid.cells() * f.stride(), 0.0);
    return f;
}

// ---------------------------------------------------------------------------
// Rotation resampling

namespace {

Eigen::Matrix3d embed(const Rotation& g) {
    Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
    if (g.is_planar())
        m.topLeftCorner<2, 2>() = g.planar().matrix();
    else
        m = g.spatial().matrix();
    return m;
}

struct SignedPermutation {
    std::array<int, 3> source_axis{};
    std::array<int, 3> sign{};
};

// Source coordinate q_b = sign_b * x_{axis_b} + c_b for the inverse rotation.
std::optional<SignedPermutation> as_signed_permutation(const Grid& grid, const Rotation& g) {
    if (g.dim() != grid.dim) return std::nullopt;
    const Eigen::Matrix3d inv = embed(g).transpose();
    SignedPermutation p;
    for (int b = 0; b < 3; ++b) {
        int found = -1;
        for (int a = 0; a < 3; ++a) {
            const double v = inv(b, a);
            if (std::fabs(std::fabs(v) - 1.0) < 1e-9) {
                found = a;
                p.sign[b] = v > 0 ? 1 : -1;
            } else if (std::fabs(v) > 1e-9) {
                return std::nullopt;
            }
        }
        if (found < 0) return std::nullopt;
        p.source_axis[b] = found;
        // Half-integer centers only map onto half-integer centers.
        if ((grid.shape[b] - grid.shape[found]) % 2 != 0) return std::nullopt;
    }
    return p;
}

}  // namespace

bool is_grid_exact(const Grid& grid, const Rotation& g) { return as_signed_permutation(grid, g).has_value(); }

std::vector<double> rotate_data(const Grid& grid, std::size_t channels, std::span<const double> data, const Rotation& g,
                                RotationMode mode) {
    if (g.dim() != grid.dim) throw std::invalid_argument("rotate_field: rotation dimension does not match the grid");
    if (data.size() != grid.cells() * channels) throw std::invalid_argument("rotate_field: data size mismatch");
    const auto perm = mode == RotationMode::Interpolated ? std::nullopt : as_signed_permutation(grid, g);
    if (mode == RotationMode::ExactSubgroup && !perm)
        throw std::invalid_argument("rotate_field: exact mode needs a rotation that permutes the grid");

    std::vector<double> out(data.size(), 0.0);
    const auto c = grid.center();
    const auto& s = grid.shape;
    const std::size_t slab = static_cast<std::size_t>(s[1]) * static_cast<std::size_t>(s[2]);

    if (perm) {
        parallel_for(static_cast<std::size_t>(s[0]), [&](std::size_t i0) {
            for (std::size_t r = 0; r < slab; ++r) {
                const std::size_t cell = i0 * slab + r;
                const Cell p = grid.unflatten(cell);
                Cell q{};
                bool inside = true;
                for (int b = 0; b < 3; ++b) {
                    const int a = perm->source_axis[b];
                    const double x = p[a] - c[a];
                    q[b] = static_cast<int>(std::lround(perm->sign[b] * x + c[b]));
                    inside = inside && q[b] >= 0 && q[b] < s[b];
                }
                if (!inside) continue;
                const std::size_t src = grid.flat(q);
                for (std::size_t ch = 0; ch < channels; ++ch) out[cell * channels + ch] = data[src * channels + ch];
            }
        });
        return out;
    }

    const Eigen::Matrix3d inv = embed(g).transpose();
    const bool planar = grid.dim == 2;
    parallel_for(static_cast<std::size_t>(s[0]), [&](std::size_t i0) {
        for (std::size_t r = 0; r < slab; ++r) {
            const std::size_t cell = i0 * slab + r;
            const Cell p = grid.unflatten(cell);
            const Eigen::Vector3d x(p[0] - c[0], p[1] - c[1], p[2] - c[2]);
            const Eigen::Vector3d q = inv * x + Eigen::Vector3d(c[0], c[1], c[2]);
            std::array<int, 3> base{};
            std::array<double, 3> frac{};
            for (int a = 0; a < 3; ++a) {
                const double fl = std::floor(q[a]);
                base[a] = static_cast<int>(fl);
                frac[a] = q[a] - fl;
            }
            if (planar) {
                base[2] = 0;
                frac[2] = 0.0;
            }
            const int corners = planar ? 4 : 8;
            for (int k = 0; k < corners; ++k) {
                Cell n{base[0] + (k & 1), base[1] + ((k >> 1) & 1), base[2] + ((k >> 2) & 1)};
                double w = 1.0;
                for (int a = 0; a < 3; ++a) w *= ((n[a] - base[a]) != 0) ? frac[a] : 1.0 - frac[a];
                if (w == 0.0 || !grid.contains(n)) continue;
                const std::size_t src = grid.flat(n);
                for (std::size_t ch = 0; ch < channels; ++ch) out[cell * channels + ch] += w * data[src * channels + ch];
            }
        }
    });
    return out;
}

ScalarField rotate_field(const ScalarField& f, const Rotation& g, RotationMode mode) {
    return ScalarField{f.grid, f.channels, rotate_data(f.grid, static_cast<std::size_t>(f.channels), f.data, g, mode)};
}

ScalarField crop(const ScalarField& o, const Cell& center_cell, const std::array<int, 3>& size) {
    std::array<int, 3> sz = size;
    if (o.grid.dim == 2) sz[2] = 1;
    for (int a = 0; a < o.grid.dim; ++a)
        if (sz[a] < 1 || sz[a] % 2 == 0) throw std::invalid_argument("crop: size must be odd on every axis");
    std::array<int, 3> lo{};
    std::array<double, 3> origin{};
    for (int a = 0; a < 3; ++a) {
        lo[a] = center_cell[a] - sz[a] / 2;
        origin[a] = a < o.grid.dim ? o.grid.origin[a] + lo[a] * o.grid.cell_size : 0.0;
    }
    ScalarField out = ScalarField::zeros(Grid::make(o.grid.dim, sz, o.grid.cell_size, origin), o.channels);
    for (std::size_t i = 0; i < out.grid.cells(); ++i) {
        const Cell p = out.grid.unflatten(i);
        const Cell q{p[0] + lo[0], p[1] + lo[1], p[2] + lo[2]};
        if (!o.grid.contains(q)) continue;
        for (int ch = 0; ch < o.channels; ++ch) out.at(i, ch) = o.at(q, ch);
    }
    return out;
}

ScalarField lift(const ScalarField& f, const RotationSet& set) {
    const auto m = set.size();
    const auto ch = static_cast<std::size_t>(f.channels);
    ScalarField out = ScalarField::zeros(f.grid, static_cast<int>(m * ch));
    const std::size_t stride = m * ch;
    parallel_for(m, [&](std::size_t i) {
        const auto rotated = rotate_data(f.grid, ch, f.data, set.rotations[i], RotationMode::Automatic);
        for (std::size_t cell = 0; cell < f.grid.cells(); ++cell)
            for (std::size_t c = 0; c < ch; ++c) out.data[cell * stride + i * ch + c] = rotated[cell * ch + c];
    });
    return out;
}

SteerableKernel fiber_fourier(const ScalarField& lifted, const RotationSet& set, int band) {
    const auto m = set.size();
    if (m == 0 || lifted.channels % static_cast<int>(m) != 0)
        throw std::invalid_argument("fiber_fourier: lifted channel count is not a multiple of the rotation count");
    if (set.dim() != lifted.grid.dim) throw std::invalid_argument("fiber_fourier: rotation set dimension mismatch");
    const auto groups = static_cast<std::size_t>(lifted.channels) / m;
    const FiberDescriptor fiber{lifted.grid.dim, band};
    const FiberAnalysis analysis(set, fiber.basis());
    const auto n = fiber.size();

    SteerableKernel k;
    k.base = FourierField::zeros(lifted.grid, fiber, static_cast<int>(groups));
    k.output_type = fiber.rep();
    k.lift = set.provenance;

    const std::size_t cells = lifted.grid.cells();
    constexpr std::size_t chunk = 64;
    const std::size_t in_stride = m * groups;
    parallel_for((cells + chunk - 1) / chunk, [&](std::size_t c) {
        const std::size_t begin = c * chunk;
        const std::size_t end = std::min(cells, begin + chunk);
        const auto cols = static_cast<Eigen::Index>((end - begin) * groups);
        Eigen::MatrixXd samples(static_cast<Eigen::Index>(m), cols);
        for (std::size_t cell = begin; cell < end; ++cell)
            for (std::size_t g = 0; g < groups; ++g)
                for (std::size_t i = 0; i < m; ++i)
                    samples(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>((cell - begin) * groups + g)) =
                        lifted.data[cell * in_stride + i * groups + g];
        const Eigen::MatrixXd coeffs = analysis.projector() * samples;
        for (std::size_t cell = begin; cell < end; ++cell)
            for (std::size_t g = 0; g < groups; ++g) {
                auto dst = k.base.coeffs(cell, static_cast<int>(g));
                const auto col = static_cast<Eigen::Index>((cell - begin) * groups + g);
                for (std::size_t j = 0; j < n; ++j) dst[j] = coeffs(static_cast<Eigen::Index>(j), col);
            }
    });
    return k;
}

void rotate_fiber(const FiberDescriptor& fiber, const Rotation& g, std::span<double> coeffs) {
    if (coeffs.size() != fiber.size()) throw std::invalid_argument("rotate_fiber: size mismatch");
    if (g.dim() != fiber.dim) throw std::invalid_argument("rotate_fiber: rotation dimension mismatch");
    if (fiber.dim == 2) {
        const double t = g.planar().theta();
        for (int k = 1; k <= fiber.band; ++k) {
            const double c = std::cos(k * t), s = std::sin(k * t);
            double& a = coeffs[static_cast<std::size_t>(2 * k - 1)];
            double& b = coeffs[static_cast<std::size_t>(2 * k)];
            const double na = c * a - s * b;
            const double nb = s * a + c * b;
            a = na;
            b = nb;
        }
        return;
    }
    const auto d = wigner_d_real_all(fiber.band, g.spatial());
    for (int l = 0; l <= fiber.band; ++l) {
        const int n = 2 * l + 1;
        Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> block(
            coeffs.data() + so3_block_offset(l), n, n);
        block = (d[static_cast<std::size_t>(l)] * block).eval();
    }
}

double steerability_defect(const SteerableKernel& k, const Rotation& g, RotationMode mode) {
    const auto& f = k.base;
    const auto rotated = rotate_data(f.grid, f.stride(), f.data, g, mode);
    const Rotation gi = inverse(g);
    // rho_out(g^-1) as one dense matrix, applied to every coefficient vector.
    const auto n = static_cast<Eigen::Index>(f.fiber.size());
    Eigen::MatrixXd rho = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        rotate_fiber(f.fiber, gi, std::span<double>(rho.col(j).data(), static_cast<std::size_t>(n)));
    std::vector<double> expected(f.data.size());
    const auto vectors = static_cast<Eigen::Index>(f.data.size()) / n;
    Eigen::Map<Eigen::MatrixXd>(expected.data(), n, vectors).noalias() =
        rho * Eigen::Map<const Eigen::MatrixXd>(f.data.data(), n, vectors);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < f.data.size(); ++i) {
        num += (rotated[i] - expected[i]) * (rotated[i] - expected[i]);
        den += f.data[i] * f.data[i];
    }
    return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

// ---------------------------------------------------------------------------
// SFLD container

namespace {
constexpr char kMagic[4] = {'S', 'F', 'L', 'D'};
constexpr std::uint16_t kVersion = 1;
}  // namespace

void write_sfld(std::ostream& out, const SfldHeader& h, std::span<const double> data) {
    if (data.size() != h.grid.cells() * h.channels) throw std::invalid_argument("write_sfld: data size mismatch");
    out.write(kMagic, 4);
    binary::write_le<std::uint16_t>(out, kVersion);
    binary::write_le<std::uint8_t>(out, static_cast<std::uint8_t>(h.grid.dim));
    binary::write_le<std::uint32_t>(out, h.channels);
    for (int a = 0; a < h.grid.dim; ++a) binary::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(h.grid.shape[a]));
    binary::write_le<double>(out, h.grid.cell_size);
    for (int a = 0; a < h.grid.dim; ++a) binary::write_le<double>(out, h.grid.origin[a]);
    if (h.fiber) {
        const std::string j = to_json(*h.fiber).dump();
        binary::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(j.size()));
        out.write(j.data(), static_cast<std::streamsize>(j.size()));
    } else {
        binary::write_le<std::uint32_t>(out, 0);
    }
    for (double v : data) binary::write_le<float>(out, static_cast<float>(v));
    if (!out) throw std::runtime_error("write_sfld: write failed");
}

std::pair<SfldHeader, std::vector<double>> read_sfld(std::istream& in) {
    char magic[4];
    if (!in.read(magic, 4) || std::string(magic, 4) != std::string(kMagic, 4))
        throw std::runtime_error("read_sfld: bad magic");
    const auto version = binary::read_le<std::uint16_t>(in);
    if (version != kVersion) throw std::runtime_error("read_sfld: unsupported version " + std::to_string(version));
    SfldHeader h;
    const int dim = binary::read_le<std::uint8_t>(in);
    if (dim != 2 && dim != 3) throw std::runtime_error("read_sfld: bad dimension");
    h.channels = binary::read_le<std::uint32_t>(in);
    std::array<int, 3> shape{1, 1, 1};
    for (int a = 0; a < dim; ++a) shape[a] = static_cast<int>(binary::read_le<std::uint32_t>(in));
    const double cell_size = binary::read_le<double>(in);
    std::array<double, 3> origin{};
    for (int a = 0; a < dim; ++a) origin[a] = binary::read_le<double>(in);
    h.grid = Grid::make(dim, shape, cell_size, origin);
    const auto fiber_len = binary::read_le<std::uint32_t>(in);
    if (fiber_len > 0) {
        std::string j(fiber_len, '\0');
        if (!in.read(j.data(), fiber_len)) throw std::runtime_error("read_sfld: truncated fiber descriptor");
        h.fiber = rep_from_json(nlohmann::json::parse(j));
    }
    if (h.channels == 0) throw std::runtime_error("read_sfld: zero channels");
    std::vector<double> data(h.grid.cells() * h.channels);
    for (double& v : data) v = binary::read_le<float>(in);
    return {std::move(h), std::move(data)};
}

void write_field(std::ostream& out, const ScalarField& f) {
    write_sfld(out, SfldHeader{f.grid, static_cast<std::uint32_t>(f.channels), std::nullopt}, f.data);
}

void write_field(std::ostream& out, const FourierField& f) {
    write_sfld(out, SfldHeader{f.grid, static_cast<std::uint32_t>(f.stride()), f.fiber.rep()}, f.data);
}

ScalarField read_scalar_field(std::istream& in) {
    auto [h, data] = read_sfld(in);
    if (h.fiber) throw std::runtime_error("read_scalar_field: file holds a Fourier field");
    return ScalarField{h.grid, static_cast<int>(h.channels), std::move(data)};
}

FourierField read_fourier_field(std::istream& in) {
    auto [h, data] = read_sfld(in);
    if (!h.fiber) throw std::runtime_error("read_fourier_field: file holds a trivial-type field");
    const FiberDescriptor fiber = FiberDescriptor::from_rep(*h.fiber);
    if (h.channels % fiber.size() != 0) throw std::runtime_error("read_fourier_field: channel count mismatch");
    return FourierField{h.grid, fiber, static_cast<int>(h.channels / fiber.size()), std::move(data)};
}

}  // namespace fourtran
