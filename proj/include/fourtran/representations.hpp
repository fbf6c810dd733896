#pragma once

#include "fourtran/group.hpp"

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace fourtran {

/// A real orthogonal representation of SO(2), SO(3) or a finite subgroup,
/// described by structure rather than by matrices.
class RepSpec {
public:
    enum class Kind { Trivial, Standard, So2Irrep, WignerD, Regular, DirectSum };
    using Term = std::pair<RepSpec, int>;  // (rep, multiplicity)

    static RepSpec trivial();
    static RepSpec standard(int d);
    static RepSpec so2_irrep(int k);
    static RepSpec wigner(int l);
    static RepSpec regular(FiniteRotationGroup group);
    static RepSpec direct_sum(std::vector<Term> terms);

    Kind kind() const { return kind_; }
    /// d for Standard, k for So2Irrep, l for WignerD.
    int param() const { return param_; }
    const FiniteRotationGroup& group() const;
    const std::vector<Term>& terms() const { return terms_; }

    int dim() const;

    friend bool operator==(const RepSpec& a, const RepSpec& b);

private:
    Kind kind_ = Kind::Trivial;
    int param_ = 0;
    std::shared_ptr<const FiniteRotationGroup> group_;
    std::vector<Term> terms_;
};

/// Real spherical-harmonic basis change: WignerD(1)(g) = B * rotmat(g) * B^T.
/// Rows of B pick (y, z, x).
Eigen::Matrix3d wigner_standard_basis();

/// Real Wigner D^l in the real spherical-harmonic basis (m = -l..l).
/// Supports l <= kMaxWignerOrder.
inline constexpr int kMaxWignerOrder = 20;
Eigen::MatrixXd wigner_d_real(int l, const Rot3& g);
/// D^0 .. D^lmax at once, sharing the trigonometric work.
std::vector<Eigen::MatrixXd> wigner_d_real_all(int lmax, const Rot3& g);

/// Real rotation of angle k*theta (1x1 identity for k = 0).
Eigen::MatrixXd so2_irrep_matrix(int k, double theta);

Eigen::MatrixXd evaluate(const RepSpec& rep, const Rotation& g);

/// Permutation matrix with rho(g) e_h = e_{gh}.
Eigen::MatrixXd regular_rep(const FiniteRotationGroup& group, std::size_t g_index);

/// Max deviation of sum_g rho_a(g)_{ij} rho_b(g)_{kl} from the real-form
/// orthogonality relation. For inequivalent irreps the target is zero. For
/// rho_a == rho_b the target is (|G|/d) d_ik d_jl when the irrep is absolutely
/// irreducible, and (|G|/d)(d_ik d_jl + J_ik J_jl) when it is of complex type
/// with commuting complex structure J.
double orthogonality_defect(const FiniteRotationGroup& group, const RepSpec& rep_a, const RepSpec& rep_b);

/// Real commutant dimension <chi, chi> of a rep restricted to a finite group:
/// 1 absolutely irreducible, 2 complex type or a sum of two distinct irreps, ...
int commutant_dimension(const FiniteRotationGroup& group, const RepSpec& rep);

nlohmann::json to_json(const RepSpec& rep);
RepSpec rep_from_json(const nlohmann::json& j);

}  // namespace fourtran
