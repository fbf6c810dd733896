#include "fourtran/bench.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace fourtran;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path temp_dir(const std::string& name) {
    const auto d = fs::temp_directory_path() / ("fourtran_test_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

InferenceResult truth_result(const Scene& s) {
    InferenceResult r;
    r.pick = s.truth.pick;
    r.place = s.truth.place;
    return r;
}

}  // namespace

TEST(Shapes, ModelsAndErrors) {
    for (const char* id : {"l_block_2d", "kit_shape_2d:0", "kit_shape_2d:1", "kit_shape_2d:2", "peg_cube_3d", "l_bracket_3d"}) {
        const auto m = shape_model(id);
        EXPECT_FALSE(m.boxes.empty()) << id;
        EXPECT_GT(m.radius(), 1.0) << id;
    }
    EXPECT_EQ(shape_model("l_block_2d").dim, 2);
    EXPECT_EQ(shape_model("peg_cube_3d").dim, 3);
    EXPECT_THROW(shape_model("teapot"), std::invalid_argument);
    EXPECT_THROW(shape_model("kit_shape_2d:7"), std::invalid_argument);
}

TEST(Shapes, TemplateIsCenteredAndRotatesExactly) {
    const auto m = shape_model("l_block_2d");
    const auto t = shape_template(m, {65, 65, 1}, 1.0 / 320);
    double mass = 0;
    for (double v : t.data) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
        mass += v;
    }
    // Box areas: 26 x 8 + 7 x 10.
    EXPECT_NEAR(mass, 26 * 8 + 7 * 10, 1e-9);
    // Half-integer box edges: a quarter-turn raster equals the rotated raster.
    auto r = ScalarField::zeros(t.grid);
    rasterize(r, m, t.grid.center(), Rot2(kPi / 2), 1.0);
    EXPECT_LT(testutil::max_diff(r.data, rotate_field(t, Rot2(kPi / 2), RotationMode::ExactSubgroup).data), 1e-12);
}

TEST(GenScene, DefaultCanvasAndValues) {
    const Scene s = gen_scene(2, "l_block_2d", 3);
    EXPECT_EQ(s.observation.grid.shape, (std::array<int, 3>{320, 160, 1}));
    EXPECT_DOUBLE_EQ(s.observation.grid.cell_size, 1.0 / 320);
    EXPECT_NEAR(s.extent[0], 1.0, 1e-12);
    EXPECT_NEAR(s.extent[1], 0.5, 1e-12);
    double top = 0;
    bool has_slot = false;
    for (double v : s.observation.data) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
        top = std::max(top, v);
        has_slot = has_slot || std::fabs(v - 0.5) < 1e-12;
    }
    EXPECT_EQ(top, 1.0);
    EXPECT_TRUE(has_slot);
    const Scene s3 = gen_scene(3, "peg_cube_3d", 3);
    EXPECT_EQ(s3.observation.grid.shape, (std::array<int, 3>{32, 32, 32}));
    EXPECT_THROW(gen_scene(3, "l_block_2d", 1), std::invalid_argument);
    EXPECT_THROW(gen_scene(4, "l_block_2d", 1), std::invalid_argument);
}

TEST(GenScene, GridExactRotationsAreGroupElements) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        SceneOptions opt;
        opt.grid_exact = true;
        const Scene s = gen_scene(3, "l_bracket_3d", seed, opt);
        const auto o24 = finite_group("o24");
        bool found = false;
        for (const auto& g : o24.elements) found = found || geodesic_distance(g, s.truth.object_rotation) < 1e-12;
        EXPECT_TRUE(found);
        for (int a = 0; a < 3; ++a) EXPECT_EQ(s.truth.object_center[a], std::round(s.truth.object_center[a]));
        const auto e = evaluate(s, truth_result(s));
        EXPECT_TRUE(e.exact_recovery);
        EXPECT_TRUE(e.success_high);
        EXPECT_LT(e.translation_error, 1e-12);
    }
}

TEST(GenScene, NullTaskAndPlaceTarget) {
    SceneOptions opt;
    opt.null_task = true;
    const Scene s = gen_scene(2, "kit_shape_2d:1", 5, opt);
    EXPECT_LT(geodesic_distance(s.truth.place.rotation, Rotation::identity(2)), 1e-12);
    EXPECT_LT(geodesic_distance(s.truth.slot_rotation, s.truth.object_rotation), 1e-12);
    // Continuous scene: truth cells are rounded centers, errors stay below a cell diagonal.
    const auto e = evaluate(gen_scene(2, "l_block_2d", 8), truth_result(gen_scene(2, "l_block_2d", 8)));
    EXPECT_LT(e.translation_error, 2.0 / 320);
    EXPECT_LT(e.rotation_error, 1e-12);
}

TEST(GenScene, EvaluateUsesDecodedPickPoint) {
    SceneOptions opt;
    opt.grid_exact = true;
    const Scene s = gen_scene(2, "l_block_2d", 11, opt);
    auto r = truth_result(s);
    r.pick.cell[0] += 1;
    // The place target follows the pick offset through the relative rotation.
    const Eigen::MatrixXd rel = s.truth.place.rotation.matrix();
    const Cell shifted{s.truth.place.cell[0] + static_cast<int>(std::lround(rel(0, 0))),
                       s.truth.place.cell[1] + static_cast<int>(std::lround(rel(1, 0))), 0};
    r.place.cell = shifted;
    const auto e = evaluate(s, r);
    EXPECT_NEAR(e.pick_translation_error, 1.0 / 320, 1e-12);
    EXPECT_LT(e.place_translation_error, 1e-12);
    EXPECT_FALSE(e.exact_recovery);
}

TEST(GenScene, DeterministicBytes) {
    const auto d = temp_dir("det");
    for (int dim : {2, 3}) {
        const std::string shape = dim == 2 ? "l_block_2d" : "peg_cube_3d";
        save_scene(gen_scene(dim, shape, 42), d / "a");
        save_scene(gen_scene(dim, shape, 42), d / "b");
        EXPECT_EQ(slurp(d / "a.sfld"), slurp(d / "b.sfld"));
        auto ja = nlohmann::json::parse(slurp(d / "a.json"));
        auto jb = nlohmann::json::parse(slurp(d / "b.json"));
        ja.erase("observation");
        jb.erase("observation");
        EXPECT_EQ(ja, jb);
        save_scene(gen_scene(dim, shape, 43), d / "c");
        EXPECT_NE(slurp(d / "a.sfld"), slurp(d / "c.sfld"));
    }
    fs::remove_all(d);
}

TEST(GenScene, SaveLoadRoundTrip) {
    const auto d = temp_dir("io");
    SceneOptions opt;
    opt.grid_exact = true;
    const Scene s = gen_scene(3, "l_bracket_3d", 9, opt);
    const auto sidecar = save_scene(s, d / "scene");
    EXPECT_EQ(sidecar.extension(), ".json");
    const auto j = nlohmann::json::parse(slurp(sidecar));
    EXPECT_EQ(j.at("dim"), 3);
    EXPECT_TRUE(j.contains("ground_truth"));
    for (const auto& p : {sidecar, d / "scene"}) {
        const Scene t = load_scene(p);
        EXPECT_EQ(t.shape_id, s.shape_id);
        EXPECT_EQ(t.seed, 9u);
        EXPECT_TRUE(t.grid_exact);
        EXPECT_EQ(t.truth.pick.cell, s.truth.pick.cell);
        EXPECT_EQ(t.truth.place.cell, s.truth.place.cell);
        EXPECT_LT(geodesic_distance(t.truth.place.rotation, s.truth.place.rotation), 1e-9);
        EXPECT_LT(testutil::max_diff(t.observation.data, s.observation.data), 1e-7);
    }
    std::ofstream(d / "bad.json") << "{\"format\": \"other\"}";
    EXPECT_THROW(load_scene(d / "bad.json"), std::runtime_error);
    EXPECT_THROW(load_scene(d / "missing.json"), std::runtime_error);
    fs::remove_all(d);
}

TEST(GridSymmetry, GroupsAndCellMaps) {
    EXPECT_EQ(grid_symmetry(Grid::make(2, {8, 8, 1})).size(), 4u);
    EXPECT_EQ(grid_symmetry(Grid::make(2, {8, 6, 1})).size(), 2u);
    EXPECT_EQ(grid_symmetry(Grid::make(3, {6, 6, 6})).size(), 24u);
    EXPECT_EQ(grid_symmetry(Grid::make(3, {6, 6, 4})).size(), 4u);
    EXPECT_EQ(grid_symmetry(Grid::make(3, {6, 5, 4})).size(), 2u);
    const Grid g = Grid::make(3, {6, 6, 6});
    for (const auto& rot : finite_group("o24").elements) {
        auto f = ScalarField::zeros(g);
        const Cell c{1, 4, 2};
        f.at(c) = 1.0;
        const auto r = rotate_field(f, rot, RotationMode::ExactSubgroup);
        EXPECT_EQ(r.at(rotate_cell(g, rot, c)), 1.0);
    }
}

TEST(Pipeline, PlanarGridExactSceneSucceeds) {
    SceneOptions opt;
    opt.grid_exact = true;
    const Scene s = gen_scene(2, "l_block_2d", 1, opt);
    const auto r = infer(s, PipelineConfig{});
    const auto e = evaluate(s, r);
    EXPECT_TRUE(e.success_high) << to_json(e).dump();
    EXPECT_TRUE(e.exact_recovery) << to_json(e).dump();
    EXPECT_EQ(digest(r), digest(infer(s, PipelineConfig{})));
}
