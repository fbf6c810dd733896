#include "fourtran/group.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fourtran {

namespace {

double wrap_angle(double theta) {
    double t = std::fmod(theta, kTwoPi);
    if (t < 0) t += kTwoPi;
    if (t >= kTwoPi) t = 0.0;
    return t;
}

}  // namespace

Rot2::Rot2(double theta) : theta_(wrap_angle(theta)) {}

Eigen::Matrix2d Rot2::matrix() const {
    const double c = std::cos(theta_), s = std::sin(theta_);
    Eigen::Matrix2d m;
    m << c, -s, s, c;
    return m;
}

Rot3::Rot3(double w, double x, double y, double z) {
    const double n = std::sqrt(w * w + x * x + y * y + z * z);
    if (!(n > 0.0) || !std::isfinite(n)) throw std::invalid_argument("Rot3: quaternion must be finite and nonzero");
    q_ = {w / n, x / n, y / n, z / n};
    bool flip = q_[0] < 0.0;
    if (q_[0] == 0.0) {
        for (int i = 1; i < 4; ++i) {
            if (q_[i] != 0.0) {
                flip = q_[i] < 0.0;
                break;
            }
        }
    }
    if (flip)
        for (double& c : q_) c = -c;
    if (q_[0] == 0.0) q_[0] = 0.0;  // drop -0
}

Rot3 Rot3::from_axis_angle(const Eigen::Vector3d& axis, double angle) {
    const double n = axis.norm();
    if (!(n > 0.0)) throw std::invalid_argument("Rot3::from_axis_angle: zero axis");
    const double s = std::sin(angle / 2.0) / n;
    return Rot3(std::cos(angle / 2.0), axis.x() * s, axis.y() * s, axis.z() * s);
}

Rot3 Rot3::from_matrix(const Eigen::Matrix3d& m) {
    // Shepperd: branch on the largest diagonal term of the 4x4 symmetric form.
    const double tr = m.trace();
    const std::array<double, 4> d{tr, m(0, 0), m(1, 1), m(2, 2)};
    const auto k = static_cast<int>(std::max_element(d.begin(), d.end()) - d.begin());
    double w = 0, x = 0, y = 0, z = 0;
    switch (k) {
        case 0: {
            const double s = 2.0 * std::sqrt(1.0 + tr);
            w = s / 4.0;
            x = (m(2, 1) - m(1, 2)) / s;
            y = (m(0, 2) - m(2, 0)) / s;
            z = (m(1, 0) - m(0, 1)) / s;
            break;
        }
        case 1: {
            const double s = 2.0 * std::sqrt(1.0 + m(0, 0) - m(1, 1) - m(2, 2));
            w = (m(2, 1) - m(1, 2)) / s;
            x = s / 4.0;
            y = (m(0, 1) + m(1, 0)) / s;
            z = (m(0, 2) + m(2, 0)) / s;
            break;
        }
        case 2: {
            const double s = 2.0 * std::sqrt(1.0 - m(0, 0) + m(1, 1) - m(2, 2));
            w = (m(0, 2) - m(2, 0)) / s;
            x = (m(0, 1) + m(1, 0)) / s;
            y = s / 4.0;
            z = (m(1, 2) + m(2, 1)) / s;
            break;
        }
        default: {
            const double s = 2.0 * std::sqrt(1.0 - m(0, 0) - m(1, 1) + m(2, 2));
            w = (m(1, 0) - m(0, 1)) / s;
            x = (m(0, 2) + m(2, 0)) / s;
            y = (m(1, 2) + m(2, 1)) / s;
            z = s / 4.0;
            break;
        }
    }
    return Rot3(w, x, y, z);
}

Rot3 Rot3::from_zyz(double alpha, double beta, double gamma) {
    const Rot3 a(std::cos(alpha / 2), 0, 0, std::sin(alpha / 2));
    const Rot3 b(std::cos(beta / 2), 0, std::sin(beta / 2), 0);
    const Rot3 c(std::cos(gamma / 2), 0, 0, std::sin(gamma / 2));
    return a.compose(b).compose(c);
}

Eigen::Matrix3d Rot3::matrix() const {
    const auto [w, x, y, z] = q_;
    Eigen::Matrix3d m;
    m << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
         2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
         2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return m;
}

std::array<double, 3> Rot3::zyz() const {
    const auto [w, x, y, z] = q_;
    const double cb = std::hypot(w, z);  // cos(beta / 2)
    const double sb = std::hypot(x, y);  // sin(beta / 2)
    const double beta = 2.0 * std::atan2(sb, cb);
    const double sum = 2.0 * std::atan2(z, w);    // alpha + gamma
    const double diff = 2.0 * std::atan2(-x, y);  // alpha - gamma
    if (sb < 1e-15) return {wrap_angle(sum), 0.0, 0.0};
    if (cb < 1e-15) return {wrap_angle(diff), kPi, 0.0};
    return {wrap_angle((sum + diff) / 2.0), beta, wrap_angle((sum - diff) / 2.0)};
}

Rot3 Rot3::compose(const Rot3& o) const {
    const auto [aw, ax, ay, az] = q_;
    const auto [bw, bx, by, bz] = o.q_;
    return Rot3(aw * bw - ax * bx - ay * by - az * bz,
                aw * bx + ax * bw + ay * bz - az * by,
                aw * by - ax * bz + ay * bw + az * bx,
                aw * bz + ax * by - ay * bx + az * bw);
}

Rotation Rotation::identity(int dim) {
    if (dim == 2) return Rot2{};
    if (dim == 3) return Rot3{};
    throw std::invalid_argument("Rotation::identity: dim must be 2 or 3");
}

const Rot2& Rotation::planar() const {
    if (const auto* r = std::get_if<Rot2>(&value_)) return *r;
    throw std::invalid_argument("Rotation: expected a planar rotation");
}

const Rot3& Rotation::spatial() const {
    if (const auto* r = std::get_if<Rot3>(&value_)) return *r;
    throw std::invalid_argument("Rotation: expected a spatial rotation");
}

Eigen::MatrixXd Rotation::matrix() const {
    if (is_planar()) return planar().matrix();
    return spatial().matrix();
}

Rotation compose(const Rotation& a, const Rotation& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("compose: dimension mismatch");
    if (a.is_planar()) return a.planar().compose(b.planar());
    return a.spatial().compose(b.spatial());
}

Rotation inverse(const Rotation& g) {
    if (g.is_planar()) return g.planar().inverse();
    return g.spatial().inverse();
}

double geodesic_distance(const Rotation& a, const Rotation& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("geodesic_distance: dimension mismatch");
    if (a.is_planar()) {
        const double d = std::fabs(a.planar().theta() - b.planar().theta());
        return std::min(d, kTwoPi - d);
    }
    const Rot3 r = a.spatial().inverse().compose(b.spatial());
    const double v = std::sqrt(r.x() * r.x() + r.y() * r.y() + r.z() * r.z());
    return 2.0 * std::atan2(v, std::fabs(r.w()));
}

// ---------------------------------------------------------------------------
// Finite groups

std::size_t FiniteRotationGroup::inverse_of(std::size_t i) const {
    for (std::size_t j = 0; j < size(); ++j)
        if (product(i, j) == identity_index) return j;
    throw std::logic_error("FiniteRotationGroup: element without inverse");
}

std::optional<std::size_t> FiniteRotationGroup::find(const Rotation& g, double tol) const {
    if (g.dim() != dim) return std::nullopt;
    for (std::size_t i = 0; i < elements.size(); ++i)
        if (geodesic_distance(elements[i], g) < tol) return i;
    return std::nullopt;
}

std::string FiniteRotationGroup::name() const {
    switch (kind) {
        case GroupKind::Cyclic: return "c" + std::to_string(order_param) + (dim == 3 ? "z" : "");
        case GroupKind::Octahedral: return "o24";
        case GroupKind::Icosahedral: return "i60";
    }
    return "?";
}

namespace {

std::vector<Rotation> octahedral_elements() {
    std::vector<Rotation> out;
    std::array<int, 3> perm{0, 1, 2};
    do {
        for (int signs = 0; signs < 8; ++signs) {
            Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
            for (int r = 0; r < 3; ++r) m(r, perm[r]) = (signs >> r & 1) ? -1.0 : 1.0;
            if (m.determinant() > 0) out.emplace_back(Rot3::from_matrix(m));
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return out;
}

void push_unique(std::vector<Rotation>& out, const Rot3& r) {
    for (const auto& e : out)
        if (geodesic_distance(e, r) < 1e-9) return;
    out.emplace_back(r);
}

std::vector<Rotation> icosahedral_elements() {
    // The 120 unit icosians modulo sign.
    std::vector<Rotation> out;
    for (int axis = 0; axis < 4; ++axis) {
        std::array<double, 4> q{0, 0, 0, 0};
        q[axis] = 1.0;
        push_unique(out, Rot3(q[0], q[1], q[2], q[3]));
    }
    for (int s = 0; s < 16; ++s) {
        std::array<double, 4> q;
        for (int i = 0; i < 4; ++i) q[i] = (s >> i & 1) ? -0.5 : 0.5;
        push_unique(out, Rot3(q[0], q[1], q[2], q[3]));
    }
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    const std::array<double, 4> base{0.0, 0.5, phi / 2.0, 1.0 / (2.0 * phi)};
    const std::array<std::array<int, 4>, 12> even_perms{{{0, 1, 2, 3}, {0, 2, 3, 1}, {0, 3, 1, 2}, {1, 0, 3, 2},
                                                         {1, 2, 0, 3}, {1, 3, 2, 0}, {2, 0, 1, 3}, {2, 1, 3, 0},
                                                         {2, 3, 0, 1}, {3, 0, 2, 1}, {3, 1, 0, 2}, {3, 2, 1, 0}}};
    for (const auto& p : even_perms) {
        for (int s = 0; s < 8; ++s) {
            std::array<double, 4> v = base;
            for (int i = 1; i < 4; ++i)
                if (s >> (i - 1) & 1) v[i] = -v[i];
            std::array<double, 4> q;
            for (int i = 0; i < 4; ++i) q[i] = v[p[i]];
            push_unique(out, Rot3(q[0], q[1], q[2], q[3]));
        }
    }
    // Identity first, then by rotation angle and quaternion components.
    std::stable_sort(out.begin(), out.end(), [](const Rotation& a, const Rotation& b) {
        const auto& qa = a.spatial().quaternion();
        const auto& qb = b.spatial().quaternion();
        if (std::fabs(qa[0] - qb[0]) > 1e-9) return qa[0] > qb[0];
        for (int i = 1; i < 4; ++i)
            if (std::fabs(qa[i] - qb[i]) > 1e-9) return qa[i] > qb[i];
        return false;
    });
    return out;
}

void build_table(FiniteRotationGroup& g) {
    const std::size_t n = g.elements.size();
    g.table.assign(n * n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const Rotation p = compose(g.elements[i], g.elements[j]);
            double best = std::numeric_limits<double>::infinity();
            std::size_t arg = 0;
            for (std::size_t k = 0; k < n; ++k) {
                const double d = geodesic_distance(p, g.elements[k]);
                if (d < best) {
                    best = d;
                    arg = k;
                }
            }
            if (best > 1e-9) throw std::logic_error("finite_group: element set is not closed");
            g.table[i * n + j] = static_cast<std::uint32_t>(arg);
        }
    }
    g.identity_index = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (geodesic_distance(g.elements[i], Rotation::identity(g.dim)) < 1e-12) g.identity_index = i;
}

}  // namespace

FiniteRotationGroup finite_group(GroupKind kind, int n, int dim) {
    FiniteRotationGroup g;
    g.kind = kind;
    switch (kind) {
        case GroupKind::Cyclic:
            if (n < 1) throw std::invalid_argument("finite_group: C_n needs n >= 1");
            if (dim != 2 && dim != 3) throw std::invalid_argument("finite_group: dim must be 2 or 3");
            g.order_param = n;
            g.dim = dim;
            for (int i = 0; i < n; ++i) {
                const double theta = kTwoPi * i / n;
                if (dim == 2)
                    g.elements.emplace_back(Rot2(theta));
                else
                    g.elements.emplace_back(Rot3::from_axis_angle(Eigen::Vector3d::UnitZ(), theta));
            }
            break;
        case GroupKind::Octahedral:
            g.order_param = 24;
            g.dim = 3;
            g.elements = octahedral_elements();
            break;
        case GroupKind::Icosahedral:
            g.order_param = 60;
            g.dim = 3;
            g.elements = icosahedral_elements();
            break;
    }
    build_table(g);
    return g;
}

FiniteRotationGroup finite_group(const std::string& name) {
    if (name == "o24") return finite_group(GroupKind::Octahedral);
    if (name == "i60") return finite_group(GroupKind::Icosahedral);
    if (name.size() >= 2 && (name[0] == 'c' || name[0] == 'C')) {
        const bool spatial = name.back() == 'z';
        const std::string digits = name.substr(1, name.size() - 1 - (spatial ? 1 : 0));
        if (!digits.empty() && std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; }))
            return finite_group(GroupKind::Cyclic, std::stoi(digits), spatial ? 3 : 2);
    }
    throw std::invalid_argument("finite_group: unsupported group name '" + name + "'");
}

// ---------------------------------------------------------------------------
// Rotation sets

std::optional<std::size_t> RotationSet::find(const Rotation& g, double tol) const {
    for (std::size_t i = 0; i < rotations.size(); ++i)
        if (geodesic_distance(rotations[i], g) < tol) return i;
    return std::nullopt;
}

std::size_t RotationSet::nearest(const Rotation& g) const {
    if (rotations.empty()) throw std::invalid_argument("RotationSet::nearest: empty set");
    std::size_t arg = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rotations.size(); ++i) {
        const double d = geodesic_distance(rotations[i], g);
        if (d < best) {
            best = d;
            arg = i;
        }
    }
    return arg;
}

std::array<int, 3> euler_grid_resolution(std::size_t m) {
    if (m == 0) throw std::invalid_argument("euler_grid_resolution: m must be positive");
    std::array<int, 3> best{1, 1, static_cast<int>(m)};
    bool best_exact = false;
    double best_cost = std::numeric_limits<double>::infinity();
    std::size_t best_product = std::numeric_limits<std::size_t>::max();
    for (std::size_t nb = 1; nb <= m; ++nb) {
        for (std::size_t na = 1; na * nb <= m; ++na) {
            const std::size_t ng = (m + na * nb - 1) / (na * nb);
            const std::size_t product = na * nb * ng;
            const bool exact = product == m;
            const double cost = std::max({kTwoPi / na, kPi / nb, kTwoPi / ng});
            const bool better = (exact && !best_exact) ||
                                (exact == best_exact &&
                                 (cost < best_cost - 1e-12 ||
                                  (std::fabs(cost - best_cost) <= 1e-12 && product < best_product)));
            if (better) {
                best = {static_cast<int>(na), static_cast<int>(nb), static_cast<int>(ng)};
                best_exact = exact;
                best_cost = cost;
                best_product = product;
            }
        }
    }
    return best;
}

namespace {

double seed_offset(std::uint64_t seed) {
    if (seed == 0) return 0.5;
    const double golden = 0.6180339887498948482;
    const double v = 0.5 + static_cast<double>(seed % 1000003) * golden;
    return v - std::floor(v);
}

// Super-Fibonacci spiral on S^3.
std::vector<Rotation> super_fibonacci(std::size_t m, std::uint64_t seed) {
    if (m == 1) return {Rot3{}};
    const double phi = std::sqrt(2.0);
    const double psi = 1.533751168755204288118041;
    const double offset = seed_offset(seed);
    std::vector<Rotation> out;
    out.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double s = static_cast<double>(i) + offset;
        const double r = std::sqrt(s / static_cast<double>(m));
        const double big_r = std::sqrt(1.0 - s / static_cast<double>(m));
        const double alpha = kTwoPi * s / phi;
        const double beta = kTwoPi * s / psi;
        out.emplace_back(Rot3(r * std::sin(alpha), r * std::cos(alpha), big_r * std::sin(beta), big_r * std::cos(beta)));
    }
    return out;
}

RotationSet finish(std::vector<Rotation> rots, std::vector<double> weights, std::string method, std::uint64_t seed) {
    RotationSet set;
    set.provenance = {std::move(method), seed, rots.size()};
    if (weights.empty()) weights.assign(rots.size(), 1.0);
    double total = 0;
    for (double w : weights) total += w;
    for (double& w : weights) w /= total;
    set.rotations = std::move(rots);
    set.weights = std::move(weights);
    return set;
}

}  // namespace

RotationSet sample_rotation_set(std::size_t m, const SamplingMethod& method, std::uint64_t seed) {
    if (m == 0) throw std::invalid_argument("sample_rotation_set: m must be >= 1");
    return std::visit(
        [&](const auto& meth) -> RotationSet {
            using T = std::decay_t<decltype(meth)>;
            if constexpr (std::is_same_v<T, LowDiscrepancy>) {
                return finish(super_fibonacci(m, seed), {}, "low_discrepancy", seed);
            } else if constexpr (std::is_same_v<T, PlanarGrid>) {
                std::vector<Rotation> rots;
                for (std::size_t i = 0; i < m; ++i) rots.emplace_back(Rot2(kTwoPi * i / m));
                return finish(std::move(rots), {}, "planar_grid", seed);
            } else if constexpr (std::is_same_v<T, SubgroupSampling>) {
                if (m != meth.group.size())
                    throw std::invalid_argument("sample_rotation_set: subgroup sampling needs m == |G|");
                return finish(meth.group.elements, {}, "subgroup:" + meth.group.name(), seed);
            } else if constexpr (std::is_same_v<T, EulerGrid>) {
                std::array<int, 3> res{meth.n_alpha, meth.n_beta, meth.n_gamma};
                if (res[0] <= 0 || res[1] <= 0 || res[2] <= 0) res = euler_grid_resolution(m);
                std::vector<Rotation> rots;
                std::vector<double> weights;
                rots.reserve(static_cast<std::size_t>(res[0]) * res[1] * res[2]);
                for (int ia = 0; ia < res[0]; ++ia) {
                    const double a = kTwoPi * ia / res[0];
                    for (int ib = 0; ib < res[1]; ++ib) {
                        const double b = kPi * (ib + 0.5) / res[1];
                        for (int ig = 0; ig < res[2]; ++ig) {
                            rots.emplace_back(Rot3::from_zyz(a, b, kTwoPi * ig / res[2]));
                            weights.push_back(std::sin(b));
                        }
                    }
                }
                return finish(std::move(rots), std::move(weights), "euler_grid", seed);
            } else {
                const auto& group = meth.group;
                std::vector<Rotation> base;
                if (group.dim == 2) {
                    for (std::size_t i = 0; i < m; ++i)
                        base.emplace_back(Rot2(kTwoPi * (i + seed_offset(seed)) / (m * group.size())));
                } else {
                    // Skip the identity-like first point of tiny spirals.
                    base = super_fibonacci(m + 1, seed);
                    base.erase(base.begin());
                }
                std::vector<Rotation> rots;
                for (const auto& s : base) {
                    for (const auto& a : group.elements) {
                        const Rotation as = compose(a, s);
                        if (!meth.two_sided) {
                            bool dup = false;
                            for (const auto& r : rots) dup = dup || geodesic_distance(r, as) < 1e-9;
                            if (!dup) rots.push_back(as);
                            continue;
                        }
                        for (const auto& b : group.elements) {
                            const Rotation asb = compose(as, b);
                            bool dup = false;
                            for (const auto& r : rots) {
                                if (geodesic_distance(r, asb) < 1e-9) {
                                    dup = true;
                                    break;
                                }
                            }
                            if (!dup) rots.push_back(asb);
                        }
                    }
                }
                return finish(std::move(rots), {}, std::string(meth.two_sided ? "symmetrized2:" : "symmetrized1:") + group.name(),
                              seed);
            }
        },
        method);
}

double covering_radius(const RotationSet& set, std::size_t probes, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    double worst = 0.0;
    for (std::size_t p = 0; p < probes; ++p) {
        const Rotation g = random_rotation(set.dim(), rng);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& r : set.rotations) best = std::min(best, geodesic_distance(r, g));
        worst = std::max(worst, best);
    }
    return worst;
}

}  // namespace fourtran
