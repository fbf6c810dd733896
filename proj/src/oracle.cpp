#include "fourtran/oracle.hpp"

#include "fourtran/correlation.hpp"
#include "fourtran/parallel.hpp"
#include "fourtran/transporter.hpp"

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>

namespace fourtran {

ScalarField CorrelationStack::volume(std::size_t i) const {
    ScalarField v = ScalarField::zeros(volumes.grid, 1);
    const auto m = static_cast<std::size_t>(volumes.channels);
    for (std::size_t cell = 0; cell < v.grid.cells(); ++cell) v.data[cell] = volumes.data[cell * m + i];
    return v;
}

CorrelationStack brute_place(const ScalarField& c, const ScalarField& o, const Encoder& enc_psi, const Encoder& enc_phi,
                             const RotationSet& set) {
    if (c.grid.dim != o.grid.dim) throw std::invalid_argument("brute_place: crop and scene dimensions differ");
    if (std::fabs(c.grid.cell_size - o.grid.cell_size) > 1e-12 * std::max(1.0, o.grid.cell_size))
        throw std::invalid_argument("brute_place: cell_size mismatch between crop and scene");
    for (int a = 0; a < c.grid.dim; ++a)
        if (c.grid.shape[a] % 2 == 0) throw std::invalid_argument("brute_place: crop extents must be odd");
    const ScalarField psi = encode(enc_psi, c);
    const ScalarField phi = encode(enc_phi, o);
    const auto m = set.size();
    const auto ch = static_cast<std::size_t>(psi.channels);

    // Kernel cell layout [input channel][rotation]: output channel i is the
    // plain correlation with the i-th rotated copy.
    std::vector<double> kernel(psi.grid.cells() * ch * m);
    for (std::size_t i = 0; i < m; ++i) {
        const ScalarField r = rotate_field(psi, set.rotations[i]);
        for (std::size_t cell = 0; cell < psi.grid.cells(); ++cell)
            for (std::size_t q = 0; q < ch; ++q) kernel[(cell * ch + q) * m + i] = r.data[cell * ch + q];
    }
    CorrelationStack s;
    s.set = set;
    s.volumes = ScalarField::zeros(o.grid, static_cast<int>(m));
    s.volumes.data = correlate_direct(phi, KernelView{psi.grid, psi.channels, static_cast<int>(m), kernel});
    return s;
}

CorrelationStack bandlimit_project(const CorrelationStack& stack, int band) {
    const SpectralBasis basis(stack.volumes.grid.dim, band);
    const FiberAnalysis analysis(stack.set, basis);
    const FiberSynthesis synthesis(stack.set, basis);
    const Eigen::MatrixXd p = synthesis.design() * analysis.projector();
    const auto m = stack.set.size();
    const std::size_t cells = stack.volumes.grid.cells();

    CorrelationStack out = stack;
    constexpr std::size_t chunk = 256;
    parallel_for((cells + chunk - 1) / chunk, [&](std::size_t c) {
        const std::size_t begin = c * chunk;
        const auto cols = static_cast<Eigen::Index>(std::min(cells, begin + chunk) - begin);
        const Eigen::Map<const Eigen::MatrixXd> in(stack.volumes.data.data() + begin * m, static_cast<Eigen::Index>(m), cols);
        Eigen::Map<Eigen::MatrixXd> dst(out.volumes.data.data() + begin * m, static_cast<Eigen::Index>(m), cols);
        dst.noalias() = p * in;
    });
    return out;
}

CompareReport compare(const FourierField& pipeline_logits, const CorrelationStack& stack) {
    if (!pipeline_logits.grid.same_geometry(stack.volumes.grid))
        throw std::invalid_argument("compare: pipeline and stack grids differ");
    if (static_cast<std::size_t>(stack.volumes.channels) != stack.set.size())
        throw std::invalid_argument("compare: stack volume count does not match its rotation set");
    const PoseDistribution pipe = decode_logits(pipeline_logits, stack.set);
    const CorrelationStack ref = bandlimit_project(stack, pipeline_logits.fiber.band);
    const auto& a = pipe.scores;
    const auto& b = ref.volumes.data;

    CompareReport r;
    double ma = 0, mb = 0;
    std::size_t arg_a = 0, arg_b = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        r.max_abs_err = std::max(r.max_abs_err, std::fabs(a[i] - b[i]));
        ma += a[i];
        mb += b[i];
        if (a[i] > a[arg_a]) arg_a = i;
        if (b[i] > b[arg_b]) arg_b = i;
    }
    const auto n = static_cast<double>(a.size());
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 && sbb == 0.0)
        r.pearson_r = 1.0;
    else if (saa == 0.0 || sbb == 0.0)
        r.pearson_r = 0.0;
    else
        r.pearson_r = sab / std::sqrt(saa * sbb);
    r.argmax_match = arg_a == arg_b;
    return r;
}

nlohmann::json to_json(const CompareReport& r) {
    return {{"max_abs_err", r.max_abs_err}, {"pearson_r", r.pearson_r}, {"argmax_match", r.argmax_match}};
}

}  // namespace fourtran
