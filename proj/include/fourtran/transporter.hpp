#pragma once

#include "fourtran/encoders.hpp"
#include "fourtran/fields.hpp"
#include "fourtran/group.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <map>
#include <string>
#include <vector>

namespace fourtran {

/// Scores over (cell, rotation); cell-major, rotation-fastest.
struct PoseDistribution {
    Grid grid;
    RotationSet rotations;
    std::vector<double> scores;
    bool normalized = false;

    std::size_t size() const { return scores.size(); }
    double at(std::size_t cell, std::size_t rotation) const { return scores[cell * rotations.size() + rotation]; }
};

struct Action {
    Cell cell{0, 0, 0};
    std::array<double, 3> world{0.0, 0.0, 0.0};
    Rotation rotation;
    std::size_t rotation_index = 0;
    double score = 0.0;
};

/// place logits: kappa(c) correlated with enc_phi(o), kappa(c) being the
/// fiber transform of lift(enc_psi(c)). One coefficient vector per cell of o.
FourierField place_logits(const ScalarField& c, const ScalarField& o, const Encoder& enc_psi, const Encoder& enc_phi,
                          const RotationSet& lift_set, int band);

/// Template correlation; the template plays the crop role of place_logits.
FourierField pick_logits(const ScalarField& o, const ScalarField& gripper_template, const Encoder& enc,
                         const RotationSet& lift_set, int band);

/// Per-cell synthesis over `set` without normalization.
PoseDistribution decode_logits(const FourierField& logits, const RotationSet& set);
/// decode_logits followed by a softmax over every (cell, rotation) pair.
PoseDistribution decode_coarse(const FourierField& logits, const RotationSet& set);
PoseDistribution softmax(PoseDistribution p);

/// Highest score; ties go to the lowest flattened cell, then the lowest rotation index.
Action argmax_action(const PoseDistribution& p);

struct FineResult {
    Rotation rotation;
    std::size_t index = 0;
    double score = 0.0;
    /// With the sub-cell fit: the neighbour of T nearest the chosen rotation's
    /// fitted peak. Otherwise T.
    Cell cell{0, 0, 0};
};

/// Band-limited scores at cell T, evaluated on `fine_set`; coefficients are
/// recomputed from a lift over `fine_lift_set` at band `fine_band`. With
/// `subcell_peak`, each rotation's score also gets the parabolic peak gain
/// from the axis neighbours of T, which removes most of the bias caused by
/// an object sitting between cell centers.
FineResult refine_fine(const ScalarField& c, const ScalarField& o, const Encoder& enc_psi, const Encoder& enc_phi,
                       const Cell& T, const Rotation& coarse_R, const RotationSet& fine_lift_set,
                       const RotationSet& fine_set, int fine_band, bool subcell_peak = false);

struct PipelineConfig {
    int lmax_coarse = 2;
    int lmax_fine = 4;
    std::size_t coarse_rotations = 384;
    std::size_t fine_rotations = 26244;
    std::size_t fine_lift_rotations = 1152;
    std::string lift_set = "low_discrepancy";  // or "euler_grid", "symmetrized_o24"
    std::string fine_set = "low_discrepancy";  // or "euler_grid"
    std::uint64_t seed = 0;
    std::array<int, 3> crop{17, 17, 17};
    std::array<int, 2> crop_2d{65, 65};
    std::string group_2d_lift = "c90";
    int max_order_2d = 37;
    std::size_t fine_rotations_2d = 720;
    Encoder enc_pick = Encoder::blur(1.0);
    Encoder enc_psi = Encoder::blur(1.0);
    Encoder enc_phi = Encoder::blur(1.0);
    bool run_fine = true;
    bool fine_subcell = true;
};

nlohmann::json to_json(const PipelineConfig& c);
/// Missing keys keep their defaults.
PipelineConfig config_from_json(const nlohmann::json& j);

/// Rotation sets and band limits derived from a config for one dimension.
struct PipelineSets {
    RotationSet coarse;
    int coarse_band = 0;
    RotationSet fine_lift;
    RotationSet fine;
    int fine_band = 0;
    std::array<int, 3> crop{1, 1, 1};
};

PipelineSets make_pipeline_sets(const PipelineConfig& c, int dim);

struct DistributionSummary {
    struct Entry {
        Cell cell;
        std::size_t rotation_index;
        double score;
    };
    std::vector<Entry> top;
    double entropy = 0.0;
};

/// Highest `k` entries (same tie rule as argmax_action) and Shannon entropy.
DistributionSummary summarize(const PoseDistribution& p, std::size_t k = 5);

struct InferenceResult {
    Action pick;
    Action place;
    Rotation pick_coarse;
    Rotation place_coarse;
    FourierField pick_logits;
    DistributionSummary pick_summary;
    DistributionSummary place_summary;
    FourierField place_logits;
    /// Wall-clock seconds per stage.
    std::map<std::string, double> timings;
};

/// Full pick-then-place sequence. The place rotation is relative: the
/// rotation to apply to the object as picked.
InferenceResult infer(const ScalarField& o, const ScalarField& gripper_template, const PipelineConfig& config);
InferenceResult infer(const ScalarField& o, const ScalarField& gripper_template, const PipelineConfig& config,
                      const PipelineSets& sets);

/// Observation used for place matching: o with the crop window around the
/// pick cell cleared, so the held object does not match itself.
ScalarField place_observation(const ScalarField& o, const Cell& pick_cell, const std::array<int, 3>& size);

}  // namespace fourtran
