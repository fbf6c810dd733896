#include "fourtran/bench.hpp"

#include "fourtran/oracle.hpp"
#include "fourtran/parallel.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace fourtran {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Shapes

double ShapeModel::radius() const {
    double r = 0.0;
    for (const auto& b : boxes)
        for (int corner = 0; corner < 8; ++corner) {
            double s = 0.0;
            for (int a = 0; a < dim; ++a) {
                const double v = (corner >> a) & 1 ? b.hi[a] : b.lo[a];
                s += v * v;
            }
            r = std::max(r, std::sqrt(s));
        }
    return r;
}

namespace {

Box box2(double x0, double x1, double y0, double y1) { return {{x0, y0, -0.5}, {x1, y1, 0.5}}; }
Box box3(double x0, double x1, double y0, double y1, double z0, double z1) { return {{x0, y0, z0}, {x1, y1, z1}}; }

}  // namespace

ShapeModel shape_model(const std::string& shape_id) {
    ShapeModel s;
    s.id = shape_id;
    if (shape_id == "l_block_2d") {
        s.dim = 2;
        s.boxes = {box2(-10.5, 15.5, -7.5, 0.5), box2(-10.5, -3.5, 0.5, 10.5)};
        return s;
    }
    if (shape_id.rfind("kit_shape_2d", 0) == 0) {
        int k = 0;
        const auto colon = shape_id.find(':');
        if (colon != std::string::npos) {
            try {
                k = std::stoi(shape_id.substr(colon + 1));
            } catch (const std::exception&) {
                throw std::invalid_argument("shape_model: bad kit index in '" + shape_id + "'");
            }
        } else if (shape_id != "kit_shape_2d") {
            throw std::invalid_argument("shape_model: unknown shape '" + shape_id + "'");
        }
        s.dim = 2;
        switch (k) {
            case 0:  // T
                s.boxes = {box2(-12.5, 12.5, 4.5, 10.5), box2(-3.5, 3.5, -10.5, 4.5)};
                break;
            case 1:  // F
                s.boxes = {box2(-8.5, -2.5, -12.5, 12.5), box2(-2.5, 10.5, 6.5, 12.5), box2(-2.5, 5.5, -2.5, 2.5)};
                break;
            case 2:  // P
                s.boxes = {box2(-9.5, -2.5, -12.5, 12.5), box2(-2.5, 9.5, 0.5, 12.5)};
                break;
            default: throw std::invalid_argument("shape_model: kit index must be 0, 1 or 2");
        }
        return s;
    }
    if (shape_id == "peg_cube_3d") {
        s.dim = 3;
        s.boxes = {box3(-3.5, 1.5, -2.5, 2.5, -2.5, 2.5), box3(1.5, 5.5, -0.5, 1.5, -1.5, 0.5),
                   box3(-3.5, -1.5, 2.5, 3.5, -2.5, -0.5)};
        return s;
    }
    if (shape_id == "l_bracket_3d") {
        s.dim = 3;
        s.boxes = {box3(-4.5, 3.5, -3.5, -0.5, -1.5, 1.5), box3(-4.5, -1.5, -0.5, 3.5, -1.5, 1.5),
                   box3(1.5, 3.5, -3.5, -1.5, 1.5, 2.5)};
        return s;
    }
    throw std::invalid_argument("shape_model: unknown shape '" + shape_id + "'");
}

void rasterize(ScalarField& f, const ShapeModel& shape, const std::array<double, 3>& center, const Rotation& rotation,
               double intensity) {
    const int dim = f.grid.dim;
    if (shape.dim != dim || rotation.dim() != dim) throw std::invalid_argument("rasterize: dimension mismatch");
    const Eigen::MatrixXd rinv = rotation.matrix().transpose();
    const double reach = shape.radius() + 1.0;
    constexpr int kSuper = 4;
    std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 0}, sub{1, 1, 1};
    for (int a = 0; a < dim; ++a) {
        lo[a] = std::max(0, static_cast<int>(std::floor(center[a] - reach)));
        hi[a] = std::min(f.grid.shape[a] - 1, static_cast<int>(std::ceil(center[a] + reach)));
        sub[a] = kSuper;
    }
    const double total = std::pow(kSuper, dim);
    auto offset = [&](int a, int k) { return a < dim ? (k + 0.5) / kSuper - 0.5 : 0.0; };
    Eigen::VectorXd p(dim);
    for (int i = lo[0]; i <= hi[0]; ++i)
        for (int j = lo[1]; j <= hi[1]; ++j)
            for (int k = lo[2]; k <= hi[2]; ++k) {
                const Cell cell{i, j, k};
                int count = 0;
                for (int s0 = 0; s0 < sub[0]; ++s0)
                    for (int s1 = 0; s1 < sub[1]; ++s1)
                        for (int s2 = 0; s2 < sub[2]; ++s2) {
                            const std::array<int, 3> sk{s0, s1, s2};
                            for (int a = 0; a < dim; ++a) p[a] = cell[a] + offset(a, sk[a]) - center[a];
                            const Eigen::VectorXd local = rinv * p;
                            for (const auto& b : shape.boxes) {
                                bool inside = true;
                                for (int a = 0; a < dim && inside; ++a) inside = local[a] > b.lo[a] && local[a] < b.hi[a];
                                if (inside) {
                                    ++count;
                                    break;
                                }
                            }
                        }
                if (count == 0) continue;
                double& v = f.at(cell);
                v = std::max(v, intensity * count / total);
            }
}

ScalarField shape_template(const ShapeModel& shape, const std::array<int, 3>& size, double cell_size) {
    std::array<int, 3> s = size;
    if (shape.dim == 2) s[2] = 1;
    ScalarField t = ScalarField::zeros(Grid::make(shape.dim, s, cell_size));
    rasterize(t, shape, t.grid.center(), Rotation::identity(shape.dim), 1.0);
    return t;
}

// ---------------------------------------------------------------------------
// Scenes

namespace {

Cell round_cell(const std::array<double, 3>& p, int dim) {
    Cell c{0, 0, 0};
    for (int a = 0; a < dim; ++a) c[a] = static_cast<int>(std::lround(p[a]));
    return c;
}

std::array<double, 3> to_world(const Grid& g, const std::array<double, 3>& p) {
    std::array<double, 3> w{0.0, 0.0, 0.0};
    for (int a = 0; a < g.dim; ++a) w[a] = g.origin[a] + p[a] * g.cell_size;
    return w;
}

json rotation_json(const Rotation& r) {
    if (r.is_planar()) return {{"theta", r.planar().theta()}};
    const auto& q = r.spatial().quaternion();
    return {{"quaternion", {q[0], q[1], q[2], q[3]}}};
}

Rotation rotation_from_json(const json& j) {
    if (j.contains("theta")) return Rot2(j.at("theta").get<double>());
    const auto q = j.at("quaternion").get<std::array<double, 4>>();
    return Rot3(q[0], q[1], q[2], q[3]);
}

Action action_from_json(const json& j, const Grid& grid) {
    Action a;
    a.cell = j.at("cell").get<Cell>();
    a.world = grid.world(a.cell);
    a.rotation = rotation_from_json(j.at("rotation"));
    a.score = j.value("score", 0.0);
    return a;
}

}  // namespace

Scene gen_scene(int dim, const std::string& shape_id, std::uint64_t seed, const SceneOptions& opt) {
    if (dim != 2 && dim != 3) throw std::invalid_argument("gen_scene: dim must be 2 or 3");
    const ShapeModel shape = shape_model(shape_id);
    if (shape.dim != dim) throw std::invalid_argument("gen_scene: shape '" + shape_id + "' does not match dim");
    std::array<int, 3> gs = opt.shape;
    if (gs[0] <= 0) gs = dim == 2 ? std::array<int, 3>{320, 160, 1} : std::array<int, 3>{32, 32, 32};
    if (dim == 2) gs[2] = 1;
    const double cs = opt.cell_size > 0 ? opt.cell_size : (dim == 2 ? 1.0 / 320.0 : 0.01);
    const Grid grid = Grid::make(dim, gs, cs);
    const PipelineConfig defaults;
    const int crop_half = dim == 2 ? defaults.crop_2d[0] / 2 : defaults.crop[0] / 2;
    const double r = shape.radius();
    const int margin = static_cast<int>(std::ceil(r)) + 1;
    const FiniteRotationGroup exact_group = finite_group(dim == 2 ? "c4" : "o24");

    std::mt19937_64 rng(seed);
    auto draw_center = [&]() {
        std::array<double, 3> c{0.0, 0.0, 0.0};
        for (int a = 0; a < dim; ++a) {
            const int lo = margin, hi = gs[a] - 1 - margin;
            if (hi < lo) throw std::invalid_argument("gen_scene: grid too small for the shape");
            if (opt.grid_exact)
                c[a] = std::uniform_int_distribution<int>(lo, hi)(rng);
            else
                c[a] = std::uniform_real_distribution<double>(lo, hi)(rng);
        }
        return c;
    };
    auto draw_rotation = [&]() -> Rotation {
        if (opt.grid_exact)
            return exact_group.elements[std::uniform_int_distribution<std::size_t>(0, exact_group.size() - 1)(rng)];
        return random_rotation(dim, rng);
    };

    std::array<double, 3> oc{}, sc{};
    bool placed = false;
    for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
        oc = draw_center();
        sc = draw_center();
        double cheb = 0.0;
        for (int a = 0; a < dim; ++a) cheb = std::max(cheb, std::fabs(oc[a] - sc[a]));
        placed = cheb > crop_half + r + 1.0 + opt.clearance;
    }
    if (!placed) throw std::runtime_error("gen_scene: object and slot still overlap after 100 attempts");
    const Rotation ro = draw_rotation();
    const Rotation rs = opt.null_task ? ro : draw_rotation();

    Scene s;
    s.dim = dim;
    s.observation = ScalarField::zeros(grid);
    rasterize(s.observation, shape, oc, ro, 1.0);
    rasterize(s.observation, shape, sc, rs, 0.5);
    s.shape_id = shape_id;
    s.seed = seed;
    s.grid_exact = opt.grid_exact;
    for (int a = 0; a < dim; ++a) s.extent[a] = gs[a] * cs;

    auto& t = s.truth;
    t.object_center = oc;
    t.slot_center = sc;
    t.object_rotation = ro;
    t.slot_rotation = rs;
    t.pick.cell = round_cell(oc, dim);
    t.pick.world = grid.world(t.pick.cell);
    t.pick.rotation = ro;
    t.place.cell = round_cell(sc, dim);
    t.place.world = grid.world(t.place.cell);
    t.place.rotation = compose(rs, inverse(ro));
    return s;
}

json to_json(const Action& a) {
    return {{"cell", a.cell}, {"world", a.world}, {"rotation", rotation_json(a.rotation)},
            {"rotation_index", a.rotation_index}, {"score", a.score}};
}

std::filesystem::path save_scene(const Scene& scene, const std::filesystem::path& stem) {
    auto sfld = stem;
    sfld += ".sfld";
    auto sidecar = stem;
    sidecar += ".json";
    {
        std::ofstream out(sfld, std::ios::binary);
        if (!out) throw std::runtime_error("save_scene: cannot write " + sfld.string());
        write_field(out, scene.observation);
    }
    const auto& t = scene.truth;
    json j = {{"format", "fourtran-scene"},
              {"version", 1},
              {"dim", scene.dim},
              {"observation", sfld.filename().string()},
              {"ground_truth",
               {{"pick", {{"cell", t.pick.cell}, {"rotation", rotation_json(t.pick.rotation)}}},
                {"place", {{"cell", t.place.cell}, {"rotation", rotation_json(t.place.rotation)}}},
                {"object_center", t.object_center},
                {"slot_center", t.slot_center},
                {"object_rotation", rotation_json(t.object_rotation)},
                {"slot_rotation", rotation_json(t.slot_rotation)}}},
              {"meta",
               {{"shape_id", scene.shape_id},
                {"seed", scene.seed},
                {"grid_exact", scene.grid_exact},
                {"workspace_extent_m", scene.extent}}}};
    std::ofstream out(sidecar);
    if (!out) throw std::runtime_error("save_scene: cannot write " + sidecar.string());
    out << j.dump(2) << '\n';
    return sidecar;
}

Scene load_scene(const std::filesystem::path& path) {
    auto sidecar = path;
    if (sidecar.extension() != ".json") sidecar += ".json";
    std::ifstream in(sidecar);
    if (!in) throw std::runtime_error("load_scene: cannot read " + sidecar.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw std::runtime_error("load_scene: malformed sidecar " + sidecar.string() + ": " + e.what());
    }
    try {
        if (j.value("format", "") != "fourtran-scene") throw std::runtime_error("not a fourtran scene sidecar");
        Scene s;
        s.dim = j.at("dim").get<int>();
        const auto sfld = sidecar.parent_path() / j.at("observation").get<std::string>();
        std::ifstream fin(sfld, std::ios::binary);
        if (!fin) throw std::runtime_error("cannot read " + sfld.string());
        s.observation = read_scalar_field(fin);
        if (s.observation.grid.dim != s.dim) throw std::runtime_error("observation dimension does not match sidecar");
        for (double v : s.observation.data)
            if (!(v >= 0.0 && v <= 1.0)) throw std::runtime_error("observation values must lie in [0, 1]");
        const auto& gt = j.at("ground_truth");
        auto& t = s.truth;
        t.pick = action_from_json(gt.at("pick"), s.observation.grid);
        t.place = action_from_json(gt.at("place"), s.observation.grid);
        if (!s.observation.grid.contains(t.pick.cell) || !s.observation.grid.contains(t.place.cell))
            throw std::runtime_error("ground-truth cell outside the grid");
        t.object_center = gt.at("object_center").get<std::array<double, 3>>();
        t.slot_center = gt.at("slot_center").get<std::array<double, 3>>();
        t.object_rotation = rotation_from_json(gt.at("object_rotation"));
        t.slot_rotation = rotation_from_json(gt.at("slot_rotation"));
        const auto& meta = j.at("meta");
        s.shape_id = meta.at("shape_id").get<std::string>();
        s.seed = meta.at("seed").get<std::uint64_t>();
        s.grid_exact = meta.at("grid_exact").get<bool>();
        s.extent = meta.at("workspace_extent_m").get<std::array<double, 3>>();
        return s;
    } catch (const json::exception& e) {
        throw std::runtime_error("load_scene: malformed sidecar " + sidecar.string() + ": " + e.what());
    } catch (const std::exception& e) {
        throw std::runtime_error("load_scene: " + sidecar.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Evaluation

EvalResult evaluate(const Scene& scene, const InferenceResult& r, const Thresholds& th) {
    const Grid& g = scene.observation.grid;
    const int dim = g.dim;
    const auto& t = scene.truth;
    const auto obj = to_world(g, t.object_center);
    const auto slot = to_world(g, t.slot_center);
    const auto pick = g.world(r.pick.cell);
    const auto place = g.world(r.place.cell);
    const Rotation rel = t.place.rotation;

    Eigen::VectorXd offset(dim), slot_v(dim), place_v(dim), pick_v(dim), obj_v(dim);
    for (int a = 0; a < dim; ++a) {
        offset[a] = pick[a] - obj[a];
        slot_v[a] = slot[a];
        place_v[a] = place[a];
    }
    const Eigen::VectorXd target = slot_v + rel.matrix() * offset;

    EvalResult e;
    e.pick_translation_error = offset.norm();
    e.pick_rotation_error = geodesic_distance(r.pick.rotation, t.object_rotation);
    e.place_translation_error = (place_v - target).norm();
    e.place_rotation_error = geodesic_distance(r.place.rotation, rel);
    e.translation_error = std::max(e.pick_translation_error, e.place_translation_error);
    e.rotation_error = std::max(e.pick_rotation_error, e.place_rotation_error);
    e.success_low = e.translation_error <= th.tau_low && e.rotation_error <= th.omega_low;
    e.success_high = e.success_low && e.translation_error <= th.tau_high && e.rotation_error <= th.omega_high;
    if (scene.grid_exact) {
        const FiniteRotationGroup group = finite_group(dim == 2 ? "c4" : "o24");
        RotationSet elements;
        elements.rotations = group.elements;
        const auto snap = [&](const Rotation& q) { return elements.rotations[elements.nearest(q)]; };
        e.exact_recovery = r.pick.cell == t.pick.cell && r.place.cell == t.place.cell &&
                           geodesic_distance(snap(r.pick.rotation), t.object_rotation) < 1e-9 &&
                           geodesic_distance(snap(r.place.rotation), rel) < 1e-9;
    }
    return e;
}

json to_json(const EvalResult& e) {
    return {{"translation_error_m", e.translation_error},
            {"rotation_error_rad", e.rotation_error},
            {"rotation_error_deg", e.rotation_error * 180.0 / kPi},
            {"pick_translation_error_m", e.pick_translation_error},
            {"pick_rotation_error_rad", e.pick_rotation_error},
            {"place_translation_error_m", e.place_translation_error},
            {"place_rotation_error_rad", e.place_rotation_error},
            {"success_low", e.success_low},
            {"success_high", e.success_high},
            {"exact_recovery", e.exact_recovery}};
}

InferenceResult infer(const Scene& scene, const PipelineConfig& config) {
    const PipelineSets sets = make_pipeline_sets(config, scene.dim);
    const ScalarField tmpl = shape_template(shape_model(scene.shape_id), sets.crop, scene.observation.grid.cell_size);
    return infer(scene.observation, tmpl, config, sets);
}

// ---------------------------------------------------------------------------
// Verification

FiniteRotationGroup grid_symmetry(const Grid& grid) {
    const auto& s = grid.shape;
    if (grid.dim == 2) return finite_group(s[0] == s[1] ? "c4" : "c2");
    if (s[0] == s[1] && s[1] == s[2]) return finite_group("o24");
    return finite_group(s[0] == s[1] ? "c4z" : "c2z");
}

Cell rotate_cell(const Grid& grid, const Rotation& g, const Cell& c) {
    const auto ctr = grid.center();
    const Eigen::MatrixXd r = g.matrix();
    Eigen::VectorXd d(grid.dim);
    for (int a = 0; a < grid.dim; ++a) d[a] = c[a] - ctr[a];
    const Eigen::VectorXd m = r * d;
    Cell out{0, 0, 0};
    for (int a = 0; a < grid.dim; ++a) out[a] = static_cast<int>(std::lround(m[a] + ctr[a]));
    return out;
}

RotationSet equivariant_set(const PipelineConfig& config, const FiniteRotationGroup& group, int& band) {
    if (group.dim == 2) {
        std::size_t n = finite_group(config.group_2d_lift).size();
        if (n % group.size() != 0) n = 72;
        band = std::min<int>(config.max_order_2d, static_cast<int>(n / 2));
        return sample_rotation_set(n, PlanarGrid{}, config.seed);
    }
    band = config.lmax_coarse;
    const std::size_t need = 2 * so3_coeff_count(band);
    // G u GqG with q a 45 degree turn about z: 96 points for O24, enough for l <= 2.
    {
        const Rotation q = Rot3::from_axis_angle(Eigen::Vector3d::UnitZ(), std::numbers::pi / 4);
        RotationSet s;
        s.rotations = group.elements;
        for (const auto& a : group.elements)
            for (const auto& b : group.elements) {
                const Rotation aqb = compose(compose(a, q), b);
                if (!s.find(aqb, 1e-9)) s.rotations.push_back(aqb);
            }
        if (s.size() >= need) {
            s.weights.assign(s.size(), 1.0 / static_cast<double>(s.size()));
            s.provenance = {"coset_z45:" + group.name(), 0, s.size()};
            return s;
        }
    }
    for (std::size_t base = 1;; ++base) {
        RotationSet s = sample_rotation_set(base, SymmetrizedSampling{group, true}, config.seed);
        if (s.size() >= need) return s;
    }
}

namespace {

struct Deviation {
    double normalized = 0.0;
    double relative = 0.0;
};

double log_partition(const std::vector<double>& s) {
    double top = -std::numeric_limits<double>::infinity();
    for (double v : s) top = std::max(top, v);
    double sum = 0.0;
    for (double v : s) sum += std::exp(v - top);
    return top + std::log(sum);
}

// moved(rho(g2) v, h) against base(v, g2^-1 h g1).
Deviation distribution_deviation(const PoseDistribution& base, const PoseDistribution& moved, const Rotation& g2,
                                 const Rotation& g1) {
    const auto& set = base.rotations;
    const auto m = set.size();
    std::vector<std::size_t> perm(m);
    const Rotation g2i = inverse(g2);
    for (std::size_t j = 0; j < m; ++j) {
        const auto k = set.find(compose(compose(g2i, set.rotations[j]), g1), 1e-7);
        if (!k) throw std::logic_error("verify: rotation set is not closed under the test group");
        perm[j] = *k;
    }
    const double lz_base = log_partition(base.scores);
    const double lz_moved = log_partition(moved.scores);
    double scale = 0.0;
    for (double v : base.scores) scale = std::max(scale, std::fabs(v));
    Deviation d;
    for (std::size_t cell = 0; cell < base.grid.cells(); ++cell) {
        const std::size_t dst = base.grid.flat(rotate_cell(base.grid, g2, base.grid.unflatten(cell)));
        for (std::size_t j = 0; j < m; ++j) {
            const double a = moved.scores[dst * m + j];
            const double b = base.scores[cell * m + perm[j]];
            d.relative = std::max(d.relative, std::fabs(a - b));
            d.normalized = std::max(d.normalized, std::fabs(std::exp(a - lz_moved) - std::exp(b - lz_base)));
        }
    }
    if (scale > 0) d.relative /= scale;
    return d;
}

double top_two_margin(const PoseDistribution& p) {
    double a = -std::numeric_limits<double>::infinity(), b = a;
    for (double v : p.scores) {
        if (v > a) {
            b = a;
            a = v;
        } else if (v > b) {
            b = v;
        }
    }
    return a - b;
}

}  // namespace

json verify_equivariance(const Scene& scene, const PipelineConfig& config, const VerifyOptions& opt) {
    const ScalarField& o = scene.observation;
    const Grid& grid = o.grid;
    const FiniteRotationGroup group = grid_symmetry(grid);
    int band = 0;
    const RotationSet set = equivariant_set(config, group, band);
    const PipelineSets sets = make_pipeline_sets(config, scene.dim);
    const ScalarField tmpl = shape_template(shape_model(scene.shape_id), sets.crop, grid.cell_size);
    constexpr double kDistributionTol = 1e-5;

    json checks = json::array();
    bool all_pass = true;

    // Pick: (T, R) -> (rho(g) T, g R).
    const PoseDistribution pick_base = decode_logits(pick_logits(o, tmpl, config.enc_pick, set, band), set);
    const Action pick_a = argmax_action(pick_base);
    const double pick_margin = top_two_margin(pick_base);
    for (std::size_t gi = 0; opt.check_pick && gi < group.size(); ++gi) {
        const Rotation& g = group.elements[gi];
        const ScalarField og = rotate_field(o, g, RotationMode::ExactSubgroup);
        const PoseDistribution p = decode_logits(pick_logits(og, tmpl, config.enc_pick, set, band), set);
        const Action a = argmax_action(p);
        const Cell want_cell = rotate_cell(grid, g, pick_a.cell);
        const auto want_rot = set.find(compose(g, pick_a.rotation), 1e-7);
        const Deviation dev = distribution_deviation(pick_base, p, g, Rotation::identity(scene.dim));
        const bool unique = pick_margin > opt.tolerance;
        const bool argmax_ok = a.cell == want_cell && want_rot && a.rotation_index == *want_rot;
        const bool pass = (!unique || argmax_ok) && dev.normalized <= kDistributionTol && dev.relative <= kDistributionTol;
        all_pass = all_pass && pass;
        checks.push_back({{"check", "pick"},
                          {"g", gi},
                          {"argmax_unique", unique},
                          {"argmax_ok", argmax_ok},
                          {"distribution_linf", dev.normalized},
                          {"logit_rel_linf", dev.relative},
                          {"pass", pass}});
    }

    // Place: R' = g2 R g1^-1, T' = rho(g2) T.
    const ScalarField c = crop(o, scene.truth.pick.cell, sets.crop);
    const ScalarField op = place_observation(o, scene.truth.pick.cell, sets.crop);
    const PoseDistribution place_base = decode_logits(place_logits(c, op, config.enc_psi, config.enc_phi, set, band), set);
    const Action place_a = argmax_action(place_base);
    const double place_margin = top_two_margin(place_base);

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; opt.check_place && i < group.size(); ++i)
        for (std::size_t j = 0; j < group.size(); ++j) pairs.emplace_back(i, j);
    if (pairs.size() > opt.max_pairs) {
        std::mt19937_64 rng(opt.seed);
        std::shuffle(pairs.begin(), pairs.end(), rng);
        pairs.resize(opt.max_pairs);
        std::sort(pairs.begin(), pairs.end());
    }
    double worst_dev = 0.0;
    for (const auto& [i1, i2] : pairs) {
        const Rotation& g1 = group.elements[i1];
        const Rotation& g2 = group.elements[i2];
        const ScalarField cg = rotate_field(c, g1, RotationMode::ExactSubgroup);
        const ScalarField og = rotate_field(op, g2, RotationMode::ExactSubgroup);
        const PoseDistribution p = decode_logits(place_logits(cg, og, config.enc_psi, config.enc_phi, set, band), set);
        const Action a = argmax_action(p);
        const Cell want_cell = rotate_cell(grid, g2, place_a.cell);
        const auto want_rot = set.find(compose(compose(g2, place_a.rotation), inverse(g1)), 1e-7);
        const Deviation dev = distribution_deviation(place_base, p, g2, g1);
        worst_dev = std::max(worst_dev, dev.normalized);
        const bool unique = place_margin > opt.tolerance;
        const bool argmax_ok = a.cell == want_cell && want_rot && a.rotation_index == *want_rot;
        const bool pass = (!unique || argmax_ok) && dev.normalized <= kDistributionTol && dev.relative <= kDistributionTol;
        all_pass = all_pass && pass;
        checks.push_back({{"check", "place"},
                          {"g1", i1},
                          {"g2", i2},
                          {"argmax_unique", unique},
                          {"argmax_ok", argmax_ok},
                          {"distribution_linf", dev.normalized},
                          {"logit_rel_linf", dev.relative},
                          {"pass", pass}});
    }
    return {{"mode", "equivariance"},
            {"group", group.name()},
            {"rotation_set", {{"method", set.provenance.method}, {"m", set.size()}, {"band", band}}},
            {"pick_margin", pick_margin},
            {"place_margin", place_margin},
            {"worst_distribution_linf", worst_dev},
            {"checks", checks},
            {"pass", all_pass}};
}

json verify_oracle(const Scene& scene, const PipelineConfig& config, const VerifyOptions& opt) {
    const ScalarField& o = scene.observation;
    const PipelineSets sets = make_pipeline_sets(config, scene.dim);
    RotationSet set;
    int band = 0;
    if (scene.dim == 2) {
        set = sample_rotation_set(8, PlanarGrid{}, config.seed);
        band = 4;
    } else {
        set = sets.coarse;
        band = sets.coarse_band;
    }
    const ScalarField c = crop(o, scene.truth.pick.cell, sets.crop);
    const ScalarField op = place_observation(o, scene.truth.pick.cell, sets.crop);
    const FourierField logits = place_logits(c, op, config.enc_psi, config.enc_phi, set, band);
    const CorrelationStack stack = brute_place(c, op, config.enc_psi, config.enc_phi, set);
    const CompareReport r = compare(logits, stack);
    return {{"mode", "oracle"},
            {"rotation_set", {{"method", set.provenance.method}, {"m", set.size()}, {"band", band}}},
            {"report", to_json(r)},
            {"tolerance", opt.tolerance},
            {"pass", r.max_abs_err <= opt.tolerance}};
}

json verify_steerability(const Scene& scene, const PipelineConfig& config, const VerifyOptions& opt) {
    const PipelineSets sets = make_pipeline_sets(config, scene.dim);
    const ScalarField tmpl = shape_template(shape_model(scene.shape_id), sets.crop, scene.observation.grid.cell_size);
    if (scene.dim == 2) {
        const RotationSet set = sample_rotation_set(8, PlanarGrid{}, config.seed);
        const SteerableKernel k = fiber_fourier(lift(tmpl, set), set, 4);
        json checks = json::array();
        bool pass = true;
        for (const auto& g : finite_group("c4").elements) {
            const double d = steerability_defect(k, g, RotationMode::ExactSubgroup);
            pass = pass && d <= opt.tolerance;
            checks.push_back({{"theta", g.planar().theta()}, {"defect", d}});
        }
        return {{"mode", "steerability"}, {"lift", "c8"}, {"band", 4}, {"checks", checks}, {"pass", pass}};
    }
    const FiniteRotationGroup cube = finite_group("o24");
    const std::vector<std::size_t> ms{48, 96, 192, 384};
    constexpr int kSeeds = 5;
    json trend = json::array();
    std::vector<double> means;
    for (std::size_t m : ms) {
        double total = 0.0;
        for (int s = 0; s < kSeeds; ++s) {
            const RotationSet set = sample_rotation_set(m, LowDiscrepancy{}, opt.seed + static_cast<std::uint64_t>(s));
            const SteerableKernel k = fiber_fourier(lift(tmpl, set), set, sets.coarse_band);
            double mean = 0.0;
            for (std::size_t gi = 0; gi < cube.size(); ++gi) {
                if (gi == cube.identity_index) continue;
                mean += steerability_defect(k, cube.elements[gi], RotationMode::ExactSubgroup);
            }
            total += mean / static_cast<double>(cube.size() - 1);
        }
        means.push_back(total / kSeeds);
        trend.push_back({{"m", m}, {"mean_defect", means.back()}});
    }
    bool monotone = true;
    for (std::size_t i = 1; i < means.size(); ++i) monotone = monotone && means[i] <= means[i - 1];
    return {{"mode", "steerability"},
            {"band", sets.coarse_band},
            {"trend", trend},
            {"monotone_non_increasing", monotone},
            {"pass", monotone}};
}

// ---------------------------------------------------------------------------
// Benchmark

std::uint64_t digest(const InferenceResult& r) {
    std::uint64_t h = 1469598103934665603ull;
    auto feed = [&](const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ull;
        }
    };
    auto feed_action = [&](const Action& a) {
        feed(a.cell.data(), sizeof(a.cell));
        feed(&a.rotation_index, sizeof(a.rotation_index));
        feed(&a.score, sizeof(a.score));
        if (a.rotation.is_planar()) {
            const double t = a.rotation.planar().theta();
            feed(&t, sizeof(t));
        } else {
            feed(a.rotation.spatial().quaternion().data(), 4 * sizeof(double));
        }
    };
    feed(r.pick_logits.data.data(), r.pick_logits.data.size() * sizeof(double));
    feed(r.place_logits.data.data(), r.place_logits.data.size() * sizeof(double));
    feed_action(r.pick);
    feed_action(r.place);
    return h;
}

namespace {

std::string hex(std::uint64_t v) {
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << v;
    return s.str();
}

json bench_case(const std::string& name, const ScalarField& o, const ScalarField& tmpl, const PipelineConfig& config,
                const std::vector<int>& thread_counts) {
    const PipelineSets sets = make_pipeline_sets(config, o.grid.dim);
    json runs = json::array();
    std::optional<std::uint64_t> first;
    bool identical = true;
    const int saved = thread_count();
    for (int t : thread_counts) {
        set_thread_count(t);
        const auto start = std::chrono::steady_clock::now();
        const InferenceResult r = infer(o, tmpl, config, sets);
        const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const std::uint64_t d = digest(r);
        if (!first) first = d;
        identical = identical && d == *first;
        runs.push_back({{"threads", t}, {"total_s", total}, {"stages_s", r.timings}, {"digest", hex(d)}});
    }
    set_thread_count(saved);
    return {{"case", name},
            {"grid", o.grid.shape},
            {"coarse_rotations", sets.coarse.size()},
            {"fine_rotations", sets.fine.size()},
            {"runs", runs},
            {"identical_across_threads", identical}};
}

}  // namespace

json bench(const PipelineConfig& config, int dim, const std::vector<int>& thread_counts) {
    json cases = json::array();
    bool identical = true;
    if (dim == 3) {
        // Trivial 8^3 scene with a small bar and a 5^3 crop.
        PipelineConfig small = config;
        small.crop = {5, 5, 5};
        ScalarField o = ScalarField::zeros(Grid::make(3, {8, 8, 8}, 0.01));
        ScalarField tmpl = ScalarField::zeros(Grid::make(3, {5, 5, 5}, 0.01));
        for (int i = 0; i < 3; ++i) {
            o.at(Cell{2 + i, 3, 4}) = 1.0;
            tmpl.at(Cell{1 + i, 2, 2}) = 1.0;
        }
        o.at(Cell{2, 4, 4}) = 1.0;
        tmpl.at(Cell{1, 3, 2}) = 1.0;
        cases.push_back(bench_case("trivial_8", o, tmpl, small, thread_counts));
    }
    const std::string shape = dim == 2 ? "l_block_2d" : "l_bracket_3d";
    const Scene scene = gen_scene(dim, shape, config.seed);
    const PipelineSets sets = make_pipeline_sets(config, dim);
    const ScalarField tmpl = shape_template(shape_model(shape), sets.crop, scene.observation.grid.cell_size);
    cases.push_back(bench_case(dim == 2 ? "default_2d" : "default_3d", scene.observation, tmpl, config, thread_counts));
    for (const auto& c : cases) identical = identical && c.at("identical_across_threads").get<bool>();
    return {{"cases", cases}, {"identical_across_threads", identical}};
}

}  // namespace fourtran
