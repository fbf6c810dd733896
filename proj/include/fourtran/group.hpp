#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace fourtran {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Planar rotation by an angle canonicalized into [0, 2pi).
class Rot2 {
public:
    Rot2() = default;
    explicit Rot2(double theta);

    double theta() const { return theta_; }
    Eigen::Matrix2d matrix() const;

    Rot2 compose(const Rot2& other) const { return Rot2(theta_ + other.theta_); }
    Rot2 inverse() const { return Rot2(-theta_); }

    friend bool operator==(const Rot2&, const Rot2&) = default;

private:
    double theta_ = 0.0;
};

/// Spatial rotation stored as a unit quaternion (w, x, y, z).
///
/// The double cover is resolved by keeping w >= 0; when w == 0 the first
/// nonzero component among (x, y, z) is made positive.
class Rot3 {
public:
    Rot3() = default;
    Rot3(double w, double x, double y, double z);

    static Rot3 from_axis_angle(const Eigen::Vector3d& axis, double angle);
    static Rot3 from_matrix(const Eigen::Matrix3d& m);
    /// R = Rz(alpha) Ry(beta) Rz(gamma).
    static Rot3 from_zyz(double alpha, double beta, double gamma);

    double w() const { return q_[0]; }
    double x() const { return q_[1]; }
    double y() const { return q_[2]; }
    double z() const { return q_[3]; }
    const std::array<double, 4>& quaternion() const { return q_; }

    Eigen::Matrix3d matrix() const;
    /// ZYZ angles with alpha, gamma in [0, 2pi) and beta in [0, pi]; gamma = 0
    /// when beta is 0 or pi.
    std::array<double, 3> zyz() const;

    Rot3 compose(const Rot3& other) const;
    Rot3 inverse() const { return Rot3(q_[0], -q_[1], -q_[2], -q_[3]); }

    friend bool operator==(const Rot3&, const Rot3&) = default;

private:
    std::array<double, 4> q_{1.0, 0.0, 0.0, 0.0};
};

/// An element of SO(2) or SO(3).
class Rotation {
public:
    Rotation() : value_(Rot3{}) {}
    Rotation(Rot2 r) : value_(r) {}  // NOLINT(google-explicit-constructor)
    Rotation(Rot3 r) : value_(r) {}  // NOLINT(google-explicit-constructor)

    static Rotation identity(int dim);

    int dim() const { return std::holds_alternative<Rot2>(value_) ? 2 : 3; }
    bool is_planar() const { return dim() == 2; }
    const Rot2& planar() const;
    const Rot3& spatial() const;

    /// d x d rotation matrix.
    Eigen::MatrixXd matrix() const;

    friend bool operator==(const Rotation&, const Rotation&) = default;

private:
    std::variant<Rot2, Rot3> value_;
};

Rotation compose(const Rotation& a, const Rotation& b);
Rotation inverse(const Rotation& g);
/// Rotation angle of a^-1 b, in [0, pi].
double geodesic_distance(const Rotation& a, const Rotation& b);

/// Uniform (Haar) random rotation.
template <class Rng>
Rotation random_rotation(int dim, Rng& rng);

enum class GroupKind { Cyclic, Octahedral, Icosahedral };

/// A finite subgroup of SO(2) or SO(3) with its multiplication table.
struct FiniteRotationGroup {
    GroupKind kind = GroupKind::Cyclic;
    int order_param = 1;  // n for C_n
    int dim = 2;
    std::vector<Rotation> elements;
    std::size_t identity_index = 0;
    /// table[i * size + j] = index of elements[i] o elements[j].
    std::vector<std::uint32_t> table;

    std::size_t size() const { return elements.size(); }
    std::size_t product(std::size_t i, std::size_t j) const { return table[i * size() + j]; }
    std::size_t inverse_of(std::size_t i) const;
    /// Index of the element within `tol` of g, if any.
    std::optional<std::size_t> find(const Rotation& g, double tol = 1e-9) const;
    /// Name as used in serialized configs ("c4", "o24", "i60", "c8z" for a 3D cyclic group).
    std::string name() const;
};

/// C_n is planar by default; dim = 3 gives rotations about the z axis.
FiniteRotationGroup finite_group(GroupKind kind, int n = 1, int dim = 2);
/// Parses "c<n>", "c<n>z", "o24", "i60".
FiniteRotationGroup finite_group(const std::string& name);

struct RotationSetProvenance {
    std::string method;
    std::uint64_t seed = 0;
    std::size_t m = 0;

    friend bool operator==(const RotationSetProvenance&, const RotationSetProvenance&) = default;
};

/// Ordered rotations with positive quadrature weights summing to one.
struct RotationSet {
    std::vector<Rotation> rotations;
    std::vector<double> weights;
    RotationSetProvenance provenance;

    std::size_t size() const { return rotations.size(); }
    int dim() const { return rotations.empty() ? 3 : rotations.front().dim(); }
    /// Index of the element within `tol` of g, if any (linear scan).
    std::optional<std::size_t> find(const Rotation& g, double tol = 1e-9) const;
    /// Index of the geodesically nearest element.
    std::size_t nearest(const Rotation& g) const;
};

struct LowDiscrepancy {};
struct SubgroupSampling {
    FiniteRotationGroup group;
};
struct EulerGrid {
    /// Zero means: pick resolutions from the requested count.
    int n_alpha = 0, n_beta = 0, n_gamma = 0;
};
/// Union of double cosets G s G for `base` low-discrepancy seeds s, closed
/// under left and right multiplication by G. Sizes vary with stabilizers;
/// the requested m is the number of base points.
struct SymmetrizedSampling {
    FiniteRotationGroup group;
    bool two_sided = true;
};
/// Uniform planar grid {2 pi i / m}.
struct PlanarGrid {};

using SamplingMethod = std::variant<LowDiscrepancy, SubgroupSampling, EulerGrid, SymmetrizedSampling, PlanarGrid>;

RotationSet sample_rotation_set(std::size_t m, const SamplingMethod& method, std::uint64_t seed = 0);

/// Chooses (n_alpha, n_beta, n_gamma) whose product equals m when such a
/// factorization exists (else the smallest product >= m), minimizing the
/// largest angular spacing.
std::array<int, 3> euler_grid_resolution(std::size_t m);

/// Largest nearest-neighbour distance from `probes` random rotations to the set.
double covering_radius(const RotationSet& set, std::size_t probes, std::uint64_t seed);

}  // namespace fourtran

#include "fourtran/group_impl.hpp"
