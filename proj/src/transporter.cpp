#include "fourtran/transporter.hpp"

#include "fourtran/correlation.hpp"
#include "fourtran/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fourtran {

namespace {

void check_pair(const ScalarField& c, const ScalarField& o) {
    if (c.grid.dim != o.grid.dim) throw std::invalid_argument("place_logits: crop and scene dimensions differ");
    if (std::fabs(c.grid.cell_size - o.grid.cell_size) > 1e-12 * std::max(1.0, o.grid.cell_size))
        throw std::invalid_argument("place_logits: cell_size mismatch between crop and scene");
    for (int a = 0; a < c.grid.dim; ++a)
        if (c.grid.shape[a] % 2 == 0) throw std::invalid_argument("place_logits: crop extents must be odd");
}

}  // namespace

FourierField place_logits(const ScalarField& c, const ScalarField& o, const Encoder& enc_psi, const Encoder& enc_phi,
                          const RotationSet& lift_set, int band) {
    check_pair(c, o);
    const ScalarField psi = encode(enc_psi, c);
    const ScalarField phi = encode(enc_phi, o);
    const SteerableKernel kappa = fiber_fourier(lift(psi, lift_set), lift_set, band);
    FourierField out = FourierField::zeros(o.grid, kappa.base.fiber, 1);
    out.data = correlate_fft(phi, kernel_view(kappa.base));
    return out;
}

FourierField pick_logits(const ScalarField& o, const ScalarField& gripper_template, const Encoder& enc,
                         const RotationSet& lift_set, int band) {
    return place_logits(gripper_template, o, enc, enc, lift_set, band);
}

PoseDistribution decode_logits(const FourierField& logits, const RotationSet& set) {
    if (logits.groups != 1) throw std::invalid_argument("decode_logits: expected one coefficient vector per cell");
    const FiberSynthesis synthesis(set, logits.fiber.basis());
    const auto m = set.size();
    const auto n = logits.fiber.size();
    const std::size_t cells = logits.grid.cells();

    PoseDistribution p;
    p.grid = logits.grid;
    p.rotations = set;
    p.scores.assign(cells * m, 0.0);
    constexpr std::size_t chunk = 256;
    parallel_for((cells + chunk - 1) / chunk, [&](std::size_t c) {
        const std::size_t begin = c * chunk;
        const auto cols = static_cast<Eigen::Index>(std::min(cells, begin + chunk) - begin);
        const Eigen::Map<const Eigen::MatrixXd> coeffs(logits.data.data() + begin * n, static_cast<Eigen::Index>(n), cols);
        Eigen::Map<Eigen::MatrixXd> values(p.scores.data() + begin * m, static_cast<Eigen::Index>(m), cols);
        values.noalias() = synthesis.design() * coeffs;
    });
    return p;
}

PoseDistribution softmax(PoseDistribution p) {
    if (p.scores.empty()) return p;
    double top = -std::numeric_limits<double>::infinity();
    for (double s : p.scores) top = std::max(top, s);
    constexpr std::size_t chunk = 1 << 16;
    const std::size_t chunks = (p.scores.size() + chunk - 1) / chunk;
    std::vector<double> partial(chunks, 0.0);
    parallel_for(chunks, [&](std::size_t c) {
        const std::size_t end = std::min(p.scores.size(), (c + 1) * chunk);
        double sum = 0.0;
        for (std::size_t i = c * chunk; i < end; ++i) {
            p.scores[i] = std::exp(p.scores[i] - top);
            sum += p.scores[i];
        }
        partial[c] = sum;
    });
    double total = 0.0;
    for (double s : partial) total += s;
    const double inv = 1.0 / total;
    for (double& s : p.scores) s *= inv;
    p.normalized = true;
    return p;
}

PoseDistribution decode_coarse(const FourierField& logits, const RotationSet& set) {
    return softmax(decode_logits(logits, set));
}

Action argmax_action(const PoseDistribution& p) {
    if (p.scores.empty() || p.rotations.size() == 0) throw std::invalid_argument("argmax_action: empty distribution");
    std::size_t best = 0;
    for (std::size_t i = 1; i < p.scores.size(); ++i)
        if (p.scores[i] > p.scores[best]) best = i;
    const auto m = p.rotations.size();
    Action a;
    a.cell = p.grid.unflatten(best / m);
    a.world = p.grid.world(a.cell);
    a.rotation_index = best % m;
    a.rotation = p.rotations.rotations[a.rotation_index];
    a.score = p.scores[best];
    return a;
}

DistributionSummary summarize(const PoseDistribution& p, std::size_t k) {
    DistributionSummary s;
    const auto m = p.rotations.size();
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < p.scores.size(); ++i) {
        const double v = p.scores[i];
        if (p.normalized && v > 0.0) s.entropy -= v * std::log(v);
        if (idx.size() == k && v <= p.scores[idx.back()]) continue;
        auto pos = std::find_if(idx.begin(), idx.end(), [&](std::size_t j) { return v > p.scores[j]; });
        idx.insert(pos, i);
        if (idx.size() > k) idx.pop_back();
    }
    for (std::size_t i : idx) s.top.push_back({p.grid.unflatten(i / m), i % m, p.scores[i]});
    return s;
}

namespace {

// Replaces each rotation's score at T by the peak of a quadratic fitted to its
// scores over the 3^d neighbourhood of T. Rotations whose fit has no interior
// maximum keep their largest sampled score. peak_cells receives, per rotation,
// the cell nearest its peak. Returns false (values untouched) when the
// neighbourhood leaves the grid.
template <class ValuesAt>
bool apply_subcell_peak(const Grid& grid, const Cell& T, const ValuesAt& values_at, std::vector<double>& values,
                        std::vector<Cell>& peak_cells) {
    const int dim = grid.dim;
    const int kz = dim == 3 ? 1 : 0;
    std::vector<Eigen::VectorXd> offsets;
    for (int i = -1; i <= 1; ++i)
        for (int j = -1; j <= 1; ++j)
            for (int k = -kz; k <= kz; ++k) {
                if (!grid.contains(Cell{T[0] + i, T[1] + j, T[2] + k})) return false;
                Eigen::VectorXd x(dim);
                x[0] = i;
                x[1] = j;
                if (dim == 3) x[2] = k;
                offsets.push_back(x);
            }

    // Monomials: 1, x_a, x_a x_b (a <= b).
    const int params = 1 + dim + dim * (dim + 1) / 2;
    const auto n = static_cast<Eigen::Index>(offsets.size());
    Eigen::MatrixXd design(n, params);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto& x = offsets[static_cast<std::size_t>(r)];
        int col = 0;
        design(r, col++) = 1.0;
        for (int a = 0; a < dim; ++a) design(r, col++) = x[a];
        for (int a = 0; a < dim; ++a)
            for (int b = a; b < dim; ++b) design(r, col++) = x[a] * x[b];
    }
    const Eigen::MatrixXd fit = design.completeOrthogonalDecomposition().pseudoInverse();

    const std::size_t m = values.size();
    Eigen::MatrixXd samples(n, static_cast<Eigen::Index>(m));
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto& x = offsets[static_cast<std::size_t>(r)];
        const Cell c{T[0] + static_cast<int>(x[0]), T[1] + static_cast<int>(x[1]), T[2] + (dim == 3 ? static_cast<int>(x[2]) : 0)};
        const std::vector<double> v = values_at(c);
        for (std::size_t i = 0; i < m; ++i) samples(r, static_cast<Eigen::Index>(i)) = v[i];
    }
    const Eigen::MatrixXd coef = fit * samples;
    auto offset_cell = [&](const Eigen::VectorXd& x) {
        Cell c = T;
        for (int a = 0; a < dim; ++a) c[static_cast<std::size_t>(a)] += static_cast<int>(std::lround(x[a]));
        return c;
    };
    peak_cells.assign(m, T);
    for (std::size_t i = 0; i < m; ++i) {
        const auto col = static_cast<Eigen::Index>(i);
        const Eigen::VectorXd b = coef.block(1, col, dim, 1);
        Eigen::MatrixXd h(dim, dim);
        int idx = 1 + dim;
        for (int a = 0; a < dim; ++a)
            for (int q = a; q < dim; ++q) {
                const double v = coef(idx++, col);
                h(a, q) = h(q, a) = a == q ? 2.0 * v : v;
            }
        Eigen::LLT<Eigen::MatrixXd> llt(-h);
        if (llt.info() == Eigen::Success) {
            const Eigen::VectorXd x = llt.solve(b);
            if (x.cwiseAbs().maxCoeff() <= 1.0) {
                values[i] = coef(0, col) + 0.5 * b.dot(x);
                peak_cells[i] = offset_cell(x);
                continue;
            }
        }
        Eigen::Index best_row = 0;
        values[i] = samples.col(col).maxCoeff(&best_row);
        peak_cells[i] = offset_cell(offsets[static_cast<std::size_t>(best_row)]);
    }
    return true;
}

}  // namespace

FineResult refine_fine(const ScalarField& c, const ScalarField& o, const Encoder& enc_psi, const Encoder& enc_phi,
                       const Cell& T, const Rotation& coarse_R, const RotationSet& fine_lift_set,
                       const RotationSet& fine_set, int fine_band, bool subcell_peak) {
    check_pair(c, o);
    if (!o.grid.contains(T)) throw std::invalid_argument("refine_fine: cell outside the grid");
    const ScalarField psi = encode(enc_psi, c);
    const ScalarField phi = encode(enc_phi, o);
    const ScalarField lifted = lift(psi, fine_lift_set);
    const auto m = fine_lift_set.size();
    const auto ch = static_cast<std::size_t>(psi.channels);

    // Lifted layout is [rotation][channel]; kernels want [channel][rotation].
    std::vector<double> regrouped;
    if (ch > 1) {
        regrouped.resize(lifted.data.size());
        for (std::size_t cell = 0; cell < lifted.grid.cells(); ++cell)
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t q = 0; q < ch; ++q)
                    regrouped[cell * m * ch + q * m + i] = lifted.data[cell * m * ch + i * ch + q];
    }
    const KernelView k{lifted.grid, psi.channels, static_cast<int>(m),
                       ch > 1 ? std::span<const double>(regrouped) : std::span<const double>(lifted.data)};

    // Correlation at a cell commutes with the per-cell projection, so the
    // lifted scores are projected after correlating.
    const SpectralBasis basis(o.grid.dim, fine_band);
    const FiberAnalysis analysis(fine_lift_set, basis);
    const FiberSynthesis synthesis(fine_set, basis);
    auto values_at = [&](const Cell& cell) { return synthesis.apply(analysis.apply(correlate_at(phi, k, cell))); };

    std::vector<double> values = values_at(T);
    std::vector<Cell> peak_cells;
    if (subcell_peak) apply_subcell_peak(o.grid, T, values_at, values, peak_cells);

    FineResult r;
    r.index = 0;
    double best_dist = geodesic_distance(fine_set.rotations[0], coarse_R);
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[r.index]) {
            r.index = i;
            best_dist = geodesic_distance(fine_set.rotations[i], coarse_R);
        } else if (values[i] == values[r.index]) {
            // Exact ties go to the candidate nearest the coarse estimate.
            const double d = geodesic_distance(fine_set.rotations[i], coarse_R);
            if (d < best_dist) {
                r.index = i;
                best_dist = d;
            }
        }
    }
    r.rotation = fine_set.rotations[r.index];
    r.score = values[r.index];
    r.cell = peak_cells.empty() ? T : peak_cells[r.index];
    return r;
}

// ---------------------------------------------------------------------------
// Configuration

nlohmann::json to_json(const PipelineConfig& c) {
    return {{"lmax_coarse", c.lmax_coarse},
            {"lmax_fine", c.lmax_fine},
            {"coarse_rotations", c.coarse_rotations},
            {"fine_rotations", c.fine_rotations},
            {"fine_lift_rotations", c.fine_lift_rotations},
            {"lift_set", c.lift_set},
            {"fine_set", c.fine_set},
            {"seed", c.seed},
            {"crop", c.crop},
            {"crop_2d", c.crop_2d},
            {"group_2d_lift", c.group_2d_lift},
            {"max_order_2d", c.max_order_2d},
            {"fine_rotations_2d", c.fine_rotations_2d},
            {"enc_pick", to_json(c.enc_pick)},
            {"enc_psi", to_json(c.enc_psi)},
            {"enc_phi", to_json(c.enc_phi)},
            {"run_fine", c.run_fine},
            {"fine_subcell", c.fine_subcell}};
}

PipelineConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
    PipelineConfig c;
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) j.at(key).get_to(field);
    };
    get("lmax_coarse", c.lmax_coarse);
    get("lmax_fine", c.lmax_fine);
    get("coarse_rotations", c.coarse_rotations);
    get("fine_rotations", c.fine_rotations);
    get("fine_lift_rotations", c.fine_lift_rotations);
    get("lift_set", c.lift_set);
    get("fine_set", c.fine_set);
    get("seed", c.seed);
    get("crop", c.crop);
    get("crop_2d", c.crop_2d);
    get("group_2d_lift", c.group_2d_lift);
    get("max_order_2d", c.max_order_2d);
    get("fine_rotations_2d", c.fine_rotations_2d);
    get("run_fine", c.run_fine);
    get("fine_subcell", c.fine_subcell);
    if (j.contains("enc_pick")) c.enc_pick = encoder_from_json(j.at("enc_pick"));
    if (j.contains("enc_psi")) c.enc_psi = encoder_from_json(j.at("enc_psi"));
    if (j.contains("enc_phi")) c.enc_phi = encoder_from_json(j.at("enc_phi"));
    if (c.lmax_coarse < 0 || c.lmax_fine < 0 || c.max_order_2d < 0) throw std::invalid_argument("config: negative band limit");
    for (int s : c.crop)
        if (s <= 0 || s % 2 == 0) throw std::invalid_argument("config: crop extents must be odd and positive");
    for (int s : c.crop_2d)
        if (s <= 0 || s % 2 == 0) throw std::invalid_argument("config: crop_2d extents must be odd and positive");
    return c;
}

PipelineSets make_pipeline_sets(const PipelineConfig& c, int dim) {
    PipelineSets s;
    if (dim == 2) {
        const FiniteRotationGroup g = finite_group(c.group_2d_lift);
        if (g.dim != 2) throw std::invalid_argument("config: group_2d_lift must be a planar cyclic group");
        s.coarse = sample_rotation_set(g.size(), SubgroupSampling{g}, c.seed);
        s.coarse_band = c.max_order_2d;
        s.fine_lift = s.coarse;
        s.fine = sample_rotation_set(c.fine_rotations_2d, PlanarGrid{}, c.seed);
        s.fine_band = c.max_order_2d;
        s.crop = {c.crop_2d[0], c.crop_2d[1], 1};
        return s;
    }
    if (dim != 3) throw std::invalid_argument("make_pipeline_sets: dim must be 2 or 3");
    if (c.lift_set == "low_discrepancy")
        s.coarse = sample_rotation_set(c.coarse_rotations, LowDiscrepancy{}, c.seed);
    else if (c.lift_set == "euler_grid")
        s.coarse = sample_rotation_set(c.coarse_rotations, EulerGrid{}, c.seed);
    else if (c.lift_set == "symmetrized_o24")
        s.coarse = sample_rotation_set(c.coarse_rotations, SymmetrizedSampling{finite_group("o24"), true}, c.seed);
    else
        throw std::invalid_argument("config: unknown lift_set '" + c.lift_set + "'");
    s.coarse_band = c.lmax_coarse;
    s.fine_lift = sample_rotation_set(c.fine_lift_rotations, LowDiscrepancy{}, c.seed);
    if (c.fine_set == "low_discrepancy")
        s.fine = sample_rotation_set(c.fine_rotations, LowDiscrepancy{}, c.seed + 1);
    else if (c.fine_set == "euler_grid")
        s.fine = sample_rotation_set(c.fine_rotations, EulerGrid{}, c.seed);
    else
        throw std::invalid_argument("config: unknown fine_set '" + c.fine_set + "'");
    s.fine_band = c.lmax_fine;
    s.crop = c.crop;
    return s;
}

// ---------------------------------------------------------------------------
// Inference

ScalarField place_observation(const ScalarField& o, const Cell& pick_cell, const std::array<int, 3>& size) {
    ScalarField out = o;
    std::array<int, 3> lo{}, hi{};
    for (int a = 0; a < 3; ++a) {
        const int h = a < o.grid.dim ? size[a] / 2 : 0;
        lo[a] = std::max(0, pick_cell[a] - h);
        hi[a] = std::min(o.grid.shape[a] - 1, pick_cell[a] + h);
    }
    for (int i = lo[0]; i <= hi[0]; ++i)
        for (int j = lo[1]; j <= hi[1]; ++j)
            for (int k = lo[2]; k <= hi[2]; ++k)
                for (int ch = 0; ch < o.channels; ++ch) out.at(Cell{i, j, k}, ch) = 0.0;
    return out;
}

InferenceResult infer(const ScalarField& o, const ScalarField& gripper_template, const PipelineConfig& config) {
    return infer(o, gripper_template, config, make_pipeline_sets(config, o.grid.dim));
}

InferenceResult infer(const ScalarField& o, const ScalarField& gripper_template, const PipelineConfig& config,
                      const PipelineSets& sets) {
    using clock = std::chrono::steady_clock;
    InferenceResult r;
    auto stamp = clock::now();
    auto lap = [&](const std::string& name) {
        const auto now = clock::now();
        r.timings[name] += std::chrono::duration<double>(now - stamp).count();
        stamp = now;
    };

    // Pick.
    r.pick_logits = pick_logits(o, gripper_template, config.enc_pick, sets.coarse, sets.coarse_band);
    lap("pick_logits");
    {
        const PoseDistribution p = decode_coarse(r.pick_logits, sets.coarse);
        r.pick = argmax_action(p);
        r.pick_summary = summarize(p);
    }
    r.pick_coarse = r.pick.rotation;
    lap("pick_decode");
    if (config.run_fine) {
        const FineResult f = refine_fine(gripper_template, o, config.enc_pick, config.enc_pick, r.pick.cell, r.pick.rotation,
                                         sets.fine_lift, sets.fine, sets.fine_band, config.fine_subcell);
        r.pick.rotation = f.rotation;
        r.pick.rotation_index = f.index;
        r.pick.cell = f.cell;
        r.pick.world = o.grid.world(f.cell);
        lap("pick_fine");
    }

    // Place.
    const ScalarField c = crop(o, r.pick.cell, sets.crop);
    const ScalarField o_place = place_observation(o, r.pick.cell, sets.crop);
    lap("crop");
    r.place_logits = place_logits(c, o_place, config.enc_psi, config.enc_phi, sets.coarse, sets.coarse_band);
    lap("place_logits");
    {
        const PoseDistribution p = decode_coarse(r.place_logits, sets.coarse);
        r.place = argmax_action(p);
        r.place_summary = summarize(p);
    }
    r.place_coarse = r.place.rotation;
    lap("place_decode");
    if (config.run_fine) {
        const FineResult f = refine_fine(c, o_place, config.enc_psi, config.enc_phi, r.place.cell, r.place.rotation,
                                         sets.fine_lift, sets.fine, sets.fine_band, config.fine_subcell);
        r.place.rotation = f.rotation;
        r.place.rotation_index = f.index;
        r.place.cell = f.cell;
        r.place.world = o.grid.world(f.cell);
        lap("place_fine");
    }
    return r;
}

}  // namespace fourtran
