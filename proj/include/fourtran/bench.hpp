#pragma once

#include "fourtran/fields.hpp"
#include "fourtran/transporter.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace fourtran {

/// Axis-aligned box in object-local cell units.
struct Box {
    std::array<double, 3> lo;
    std::array<double, 3> hi;
};

struct ShapeModel {
    std::string id;
    int dim = 2;
    std::vector<Box> boxes;
    /// Largest distance from the local origin to any box corner, in cells.
    double radius() const;
};

/// "l_block_2d", "kit_shape_2d:<k>" (k = 0, 1, 2), "peg_cube_3d", "l_bracket_3d".
ShapeModel shape_model(const std::string& shape_id);

/// Fractional occupancy of the shape at (center, rotation) times `intensity`,
/// accumulated with max into `f`. Center is in index units.
void rasterize(ScalarField& f, const ShapeModel& shape, const std::array<double, 3>& center, const Rotation& rotation,
               double intensity);

/// Canonical object raster centered in an odd grid of the given size.
ScalarField shape_template(const ShapeModel& shape, const std::array<int, 3>& size, double cell_size);

struct SceneOptions {
    bool grid_exact = false;
    /// Slot placed in the same orientation as the object.
    bool null_task = false;
    /// Zero keeps the defaults (320 x 160 in 2D, 32^3 in 3D).
    std::array<int, 3> shape{0, 0, 0};
    double cell_size = 0.0;
    /// Required center separation beyond the shape radius (per axis, cells).
    int clearance = 0;
};

struct SceneTruth {
    Action pick;
    Action place;
    /// Continuous poses in index units.
    std::array<double, 3> object_center{};
    std::array<double, 3> slot_center{};
    Rotation object_rotation;
    Rotation slot_rotation;
};

/// Observation values: object occupancy at 1.0, target slot silhouette at 0.5.
struct Scene {
    int dim = 2;
    ScalarField observation;
    SceneTruth truth;
    std::string shape_id;
    std::uint64_t seed = 0;
    bool grid_exact = false;
    std::array<double, 3> extent{};
};

Scene gen_scene(int dim, const std::string& shape_id, std::uint64_t seed, const SceneOptions& options = {});

/// Writes <stem>.sfld and the sidecar <stem>.json; returns the sidecar path.
std::filesystem::path save_scene(const Scene& scene, const std::filesystem::path& stem);
/// Accepts the sidecar path or the stem.
Scene load_scene(const std::filesystem::path& path);

struct Thresholds {
    double tau_low = 0.01;
    double omega_low = 15.0 * kPi / 180.0;
    double tau_high = 0.005;
    double omega_high = 7.5 * kPi / 180.0;
};

struct EvalResult {
    double translation_error = 0.0;  // meters, max over pick and place
    double rotation_error = 0.0;     // radians, max over pick and place
    double pick_translation_error = 0.0;
    double pick_rotation_error = 0.0;
    double place_translation_error = 0.0;
    double place_rotation_error = 0.0;
    bool success_low = false;
    bool success_high = false;
    /// Grid-exact scenes: cells equal and rotations snap to the true group element.
    bool exact_recovery = false;
};

/// The place target accounts for the decoded pick point: it is where that
/// point lands when the object sits in the slot.
EvalResult evaluate(const Scene& scene, const InferenceResult& r, const Thresholds& t = {});

nlohmann::json to_json(const Action& a);
nlohmann::json to_json(const EvalResult& e);

InferenceResult infer(const Scene& scene, const PipelineConfig& config);

/// Grid-exact rotations of the scene grid: C_4 for square planar grids, the
/// cube group for cubic grids, C_2 otherwise.
FiniteRotationGroup grid_symmetry(const Grid& grid);

/// rho_1(g) acting on a cell index about the grid center (grid-exact g).
Cell rotate_cell(const Grid& grid, const Rotation& g, const Cell& c);

/// Rotation set used by verify_equivariance: closed under left and right
/// multiplication by `group`.
RotationSet equivariant_set(const PipelineConfig& config, const FiniteRotationGroup& group, int& band);

struct VerifyOptions {
    std::size_t max_pairs = 50;
    std::uint64_t seed = 0;
    double tolerance = 1e-6;
    bool check_pick = true;
    bool check_place = true;
};

nlohmann::json verify_equivariance(const Scene& scene, const PipelineConfig& config, const VerifyOptions& opt = {});
nlohmann::json verify_oracle(const Scene& scene, const PipelineConfig& config, const VerifyOptions& opt = {});
nlohmann::json verify_steerability(const Scene& scene, const PipelineConfig& config, const VerifyOptions& opt = {});

/// Stage timings single- and multi-threaded plus an output digest check.
nlohmann::json bench(const PipelineConfig& config, int dim, const std::vector<int>& thread_counts);

/// FNV-1a digest of logits and decoded actions.
std::uint64_t digest(const InferenceResult& r);

}  // namespace fourtran
