#include "fourtran/representations.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <mutex>
#include <stdexcept>

namespace fourtran {

RepSpec RepSpec::trivial() { return RepSpec{}; }

RepSpec RepSpec::standard(int d) {
    if (d != 2 && d != 3) throw std::invalid_argument("RepSpec::standard: d must be 2 or 3");
    RepSpec r;
    r.kind_ = Kind::Standard;
    r.param_ = d;
    return r;
}

RepSpec RepSpec::so2_irrep(int k) {
    if (k < 0) throw std::invalid_argument("RepSpec::so2_irrep: k must be non-negative");
    RepSpec r;
    r.kind_ = Kind::So2Irrep;
    r.param_ = k;
    return r;
}

RepSpec RepSpec::wigner(int l) {
    if (l < 0 || l > kMaxWignerOrder) throw std::invalid_argument("RepSpec::wigner: l out of range");
    RepSpec r;
    r.kind_ = Kind::WignerD;
    r.param_ = l;
    return r;
}

RepSpec RepSpec::regular(FiniteRotationGroup group) {
    RepSpec r;
    r.kind_ = Kind::Regular;
    r.param_ = static_cast<int>(group.size());
    r.group_ = std::make_shared<const FiniteRotationGroup>(std::move(group));
    return r;
}

RepSpec RepSpec::direct_sum(std::vector<Term> terms) {
    for (const auto& [rep, mult] : terms)
        if (mult < 0) throw std::invalid_argument("RepSpec::direct_sum: negative multiplicity");
    RepSpec r;
    r.kind_ = Kind::DirectSum;
    r.terms_ = std::move(terms);
    return r;
}

const FiniteRotationGroup& RepSpec::group() const {
    if (!group_) throw std::logic_error("RepSpec::group: not a regular representation");
    return *group_;
}

int RepSpec::dim() const {
    switch (kind_) {
        case Kind::Trivial: return 1;
        case Kind::Standard: return param_;
        case Kind::So2Irrep: return param_ == 0 ? 1 : 2;
        case Kind::WignerD: return 2 * param_ + 1;
        case Kind::Regular: return param_;
        case Kind::DirectSum: {
            int d = 0;
            for (const auto& [rep, mult] : terms_) d += mult * rep.dim();
            return d;
        }
    }
    return 0;
}

bool operator==(const RepSpec& a, const RepSpec& b) {
    if (a.kind_ != b.kind_ || a.param_ != b.param_) return false;
    if (a.kind_ == RepSpec::Kind::Regular)
        return a.group_->kind == b.group_->kind && a.group_->order_param == b.group_->order_param &&
               a.group_->dim == b.group_->dim;
    return a.terms_ == b.terms_;
}

// ---------------------------------------------------------------------------
// Wigner D

namespace {

using cplx = std::complex<double>;

double factorial(int n) {
    static const auto table = [] {
        std::array<double, 2 * kMaxWignerOrder + 2> t{};
        t[0] = 1.0;
        for (std::size_t i = 1; i < t.size(); ++i) t[i] = t[i - 1] * static_cast<double>(i);
        return t;
    }();
    return table[static_cast<std::size_t>(n)];
}

// Complex-to-real spherical harmonic change of basis, rows indexed by real m.
const Eigen::MatrixXcd& real_basis(int l) {
    static const auto table = [] {
        std::vector<Eigen::MatrixXcd> t;
        const double s2 = 1.0 / std::sqrt(2.0);
        for (int ll = 0; ll <= kMaxWignerOrder; ++ll) {
            const int n = 2 * ll + 1;
            Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(n, n);
            for (int m = -ll; m <= ll; ++m) {
                const double sign = (m % 2 == 0) ? 1.0 : -1.0;
                if (m > 0) {
                    c(m + ll, m + ll) = sign * s2;
                    c(m + ll, -m + ll) = s2;
                } else if (m < 0) {
                    c(m + ll, m + ll) = cplx(0, s2);
                    c(m + ll, -m + ll) = cplx(0, -sign * s2);
                } else {
                    c(ll, ll) = 1.0;
                }
            }
            t.push_back(std::move(c));
        }
        return t;
    }();
    return table[static_cast<std::size_t>(l)];
}

// Half-angle ZYZ parameters taken straight from the quaternion: they stay
// well conditioned next to beta = 0 and beta = pi.
struct HalfAngles {
    double cb, sb;    // cos(beta/2), sin(beta/2)
    double sum_half;  // (alpha + gamma) / 2
    double diff_half; // (alpha - gamma) / 2
};

HalfAngles half_angles(const Rot3& g) {
    const auto [w, x, y, z] = g.quaternion();
    return {std::hypot(w, z), std::hypot(x, y), std::atan2(z, w), std::atan2(-x, y)};
}

Eigen::MatrixXd wigner_from_half(int l, const HalfAngles& h, const std::vector<double>& cpow,
                                 const std::vector<double>& spow) {
    const int n = 2 * l + 1;
    // conj(D)_{m'm} = exp(i m' alpha) d_{m'm}(beta) exp(i m gamma).
    Eigen::MatrixXcd dc(n, n);
    for (int mp = -l; mp <= l; ++mp) {
        for (int m = -l; m <= l; ++m) {
            double total = 0.0;
            const int kmin = std::max(0, m - mp);
            const int kmax = std::min(l + m, l - mp);
            for (int k = kmin; k <= kmax; ++k) {
                const int sign_exp = mp - m + k;
                const double term = cpow[static_cast<std::size_t>(2 * l + m - mp - 2 * k)] *
                                    spow[static_cast<std::size_t>(mp - m + 2 * k)] /
                                    (factorial(l + m - k) * factorial(k) * factorial(mp - m + k) * factorial(l - mp - k));
                total += (sign_exp % 2 == 0) ? term : -term;
            }
            total *= std::sqrt(factorial(l + mp) * factorial(l - mp) * factorial(l + m) * factorial(l - m));
            const double phase = (mp + m) * h.sum_half + (mp - m) * h.diff_half;
            dc(mp + l, m + l) = total * cplx(std::cos(phase), std::sin(phase));
        }
    }
    const Eigen::MatrixXcd& c = real_basis(l);
    const Eigen::MatrixXcd r = c * dc * c.adjoint();
    return r.real();
}

}  // namespace

Eigen::Matrix3d wigner_standard_basis() {
    Eigen::Matrix3d b;
    b << 0, 1, 0, 0, 0, 1, 1, 0, 0;
    return b;
}

std::vector<Eigen::MatrixXd> wigner_d_real_all(int lmax, const Rot3& g) {
    if (lmax < 0 || lmax > kMaxWignerOrder) throw std::invalid_argument("wigner_d_real: order out of range");
    const HalfAngles h = half_angles(g);
    std::vector<double> cpow(2 * lmax + 1, 1.0), spow(2 * lmax + 1, 1.0);
    for (std::size_t i = 1; i < cpow.size(); ++i) {
        cpow[i] = cpow[i - 1] * h.cb;
        spow[i] = spow[i - 1] * h.sb;
    }
    std::vector<Eigen::MatrixXd> out;
    out.reserve(static_cast<std::size_t>(lmax) + 1);
    for (int l = 0; l <= lmax; ++l) out.push_back(wigner_from_half(l, h, cpow, spow));
    return out;
}

Eigen::MatrixXd wigner_d_real(int l, const Rot3& g) { return std::move(wigner_d_real_all(l, g).back()); }

Eigen::MatrixXd so2_irrep_matrix(int k, double theta) {
    if (k == 0) return Eigen::MatrixXd::Identity(1, 1);
    Eigen::MatrixXd m(2, 2);
    const double c = std::cos(k * theta), s = std::sin(k * theta);
    m << c, -s, s, c;
    return m;
}

Eigen::MatrixXd regular_rep(const FiniteRotationGroup& group, std::size_t g_index) {
    if (g_index >= group.size()) throw std::out_of_range("regular_rep: element index out of range");
    const auto n = static_cast<Eigen::Index>(group.size());
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t h = 0; h < group.size(); ++h)
        p(static_cast<Eigen::Index>(group.product(g_index, h)), static_cast<Eigen::Index>(h)) = 1.0;
    return p;
}

Eigen::MatrixXd evaluate(const RepSpec& rep, const Rotation& g) {
    using K = RepSpec::Kind;
    switch (rep.kind()) {
        case K::Trivial: return Eigen::MatrixXd::Identity(1, 1);
        case K::Standard:
            if (g.dim() != rep.param()) throw std::invalid_argument("evaluate: Standard(d) needs a d-dimensional rotation");
            return g.matrix();
        case K::So2Irrep:
            if (!g.is_planar()) throw std::invalid_argument("evaluate: So2Irrep needs a planar rotation");
            return so2_irrep_matrix(rep.param(), g.planar().theta());
        case K::WignerD:
            if (g.is_planar()) throw std::invalid_argument("evaluate: WignerD needs a spatial rotation");
            return wigner_d_real(rep.param(), g.spatial());
        case K::Regular: {
            const auto& group = rep.group();
            if (g.dim() != group.dim) throw std::invalid_argument("evaluate: Regular rep dimension mismatch");
            const auto idx = group.find(g);
            if (!idx) throw std::invalid_argument("evaluate: rotation is not an element of " + group.name());
            return regular_rep(group, *idx);
        }
        case K::DirectSum: {
            const int d = rep.dim();
            Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, d);
            int at = 0;
            for (const auto& [sub, mult] : rep.terms()) {
                if (mult == 0) continue;
                const Eigen::MatrixXd block = evaluate(sub, g);
                for (int i = 0; i < mult; ++i) {
                    out.block(at, at, block.rows(), block.cols()) = block;
                    at += static_cast<int>(block.rows());
                }
            }
            return out;
        }
    }
    throw std::logic_error("evaluate: unknown representation kind");
}

// ---------------------------------------------------------------------------
// Orthogonality

namespace {

std::vector<Eigen::MatrixXd> evaluate_on(const FiniteRotationGroup& group, const RepSpec& rep) {
    std::vector<Eigen::MatrixXd> out;
    out.reserve(group.size());
    for (const auto& g : group.elements) out.push_back(evaluate(rep, g));
    return out;
}

double character_product(const std::vector<Eigen::MatrixXd>& a, const std::vector<Eigen::MatrixXd>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i].trace() * b[i].trace();
    return s / static_cast<double>(a.size());
}

// Orthonormal basis (Frobenius) of the commutant {X : rho(g) X = X rho(g)}.
std::vector<Eigen::MatrixXd> commutant_basis(const std::vector<Eigen::MatrixXd>& mats) {
    const auto d = mats.front().rows();
    std::vector<Eigen::MatrixXd> basis;
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(d, d);
            for (const auto& m : mats) avg += m.col(i) * m.col(j).transpose();
            avg /= static_cast<double>(mats.size());
            for (const auto& b : basis) avg -= (b.array() * avg.array()).sum() * b;
            const double n = avg.norm();
            if (n > 1e-8) basis.push_back(avg / n);
        }
    }
    return basis;
}

}  // namespace

int commutant_dimension(const FiniteRotationGroup& group, const RepSpec& rep) {
    const auto mats = evaluate_on(group, rep);
    return static_cast<int>(std::lround(character_product(mats, mats)));
}

double orthogonality_defect(const FiniteRotationGroup& group, const RepSpec& rep_a, const RepSpec& rep_b) {
    const auto a = evaluate_on(group, rep_a);
    const auto b = evaluate_on(group, rep_b);
    const double order = static_cast<double>(group.size());

    // Irreducibility over the reals: commutant must be R (dim 1) or C (dim 2
    // with a complex structure).
    auto complex_structure = [&](const std::vector<Eigen::MatrixXd>& mats, const RepSpec& rep) -> Eigen::MatrixXd {
        const int c = static_cast<int>(std::lround(character_product(mats, mats)));
        if (c == 1) return {};
        if (c == 2) {
            for (const auto& x : commutant_basis(mats)) {
                // The non-identity direction squares to a negative multiple of I iff complex type.
                Eigen::MatrixXd j = x - (x.trace() / static_cast<double>(x.rows())) *
                                            Eigen::MatrixXd::Identity(x.rows(), x.cols());
                if (j.norm() < 1e-8) continue;
                const Eigen::MatrixXd sq = j * j;
                const double lambda = sq.trace() / static_cast<double>(sq.rows());
                if (lambda < 0 && (sq - lambda * Eigen::MatrixXd::Identity(sq.rows(), sq.cols())).norm() < 1e-8) {
                    j /= std::sqrt(-lambda);
                    return j;
                }
            }
        }
        throw std::invalid_argument("orthogonality_defect: representation " + to_json(rep).dump() +
                                    " is not irreducible over " + group.name());
    };
    const Eigen::MatrixXd ja = complex_structure(a, rep_a);
    const Eigen::MatrixXd jb = complex_structure(b, rep_b);

    const bool same = rep_a == rep_b;
    if (!same && std::fabs(character_product(a, b)) > 1e-8)
        throw std::invalid_argument("orthogonality_defect: distinct but equivalent irreps are not supported");

    const auto da = a.front().rows(), db = b.front().rows();
    double defect = 0.0;
    for (Eigen::Index i = 0; i < da; ++i) {
        for (Eigen::Index j = 0; j < da; ++j) {
            for (Eigen::Index k = 0; k < db; ++k) {
                for (Eigen::Index l = 0; l < db; ++l) {
                    double s = 0.0;
                    for (std::size_t g = 0; g < a.size(); ++g) s += a[g](i, j) * b[g](k, l);
                    double target = 0.0;
                    if (same) {
                        target = (i == k && j == l) ? 1.0 : 0.0;
                        if (ja.size() != 0) target += ja(i, k) * ja(j, l);
                        target *= order / static_cast<double>(da);
                    }
                    defect = std::max(defect, std::fabs(s - target));
                }
            }
        }
    }
    return defect;
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json to_json(const RepSpec& rep) {
    using K = RepSpec::Kind;
    switch (rep.kind()) {
        case K::Trivial: return {{"trivial", 1}};
        case K::Standard: return {{"standard", rep.param()}};
        case K::So2Irrep: return {{"so2", rep.param()}};
        case K::WignerD: return {{"wigner", rep.param()}};
        case K::Regular: return {{"regular", rep.group().name()}};
        case K::DirectSum: {
            nlohmann::json terms = nlohmann::json::array();
            for (const auto& [sub, mult] : rep.terms()) {
                nlohmann::json t = to_json(sub);
                t["mult"] = mult;
                terms.push_back(std::move(t));
            }
            return {{"sum", std::move(terms)}};
        }
    }
    return {};
}

RepSpec rep_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("rep_from_json: expected an object");
    if (j.contains("trivial")) return RepSpec::trivial();
    if (j.contains("standard")) return RepSpec::standard(j.at("standard").get<int>());
    if (j.contains("so2")) return RepSpec::so2_irrep(j.at("so2").get<int>());
    if (j.contains("wigner")) return RepSpec::wigner(j.at("wigner").get<int>());
    if (j.contains("regular")) return RepSpec::regular(finite_group(j.at("regular").get<std::string>()));
    if (j.contains("sum")) {
        std::vector<RepSpec::Term> terms;
        for (const auto& t : j.at("sum")) terms.emplace_back(rep_from_json(t), t.value("mult", 1));
        return RepSpec::direct_sum(std::move(terms));
    }
    throw std::invalid_argument("rep_from_json: unknown representation " + j.dump());
}

}  // namespace fourtran
