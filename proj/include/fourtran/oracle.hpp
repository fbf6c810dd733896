#pragma once

#include "fourtran/encoders.hpp"
#include "fourtran/fields.hpp"

#include <nlohmann/json.hpp>

namespace fourtran {

/// Per-rotation correlation volumes over the scene grid. Volume i is channel
/// i of `volumes`.
struct CorrelationStack {
    RotationSet set;
    ScalarField volumes;

    std::size_t size() const { return set.size(); }
    ScalarField volume(std::size_t i) const;
};

/// Volume i = direct correlation of rotate_field(enc_psi(c), g_i) with enc_phi(o).
CorrelationStack brute_place(const ScalarField& c, const ScalarField& o, const Encoder& enc_psi, const Encoder& enc_phi,
                             const RotationSet& set);

/// Per cell: forward transform at `band`, then synthesis on the same set.
CorrelationStack bandlimit_project(const CorrelationStack& stack, int band);

struct CompareReport {
    double max_abs_err = 0.0;
    double pearson_r = 1.0;
    bool argmax_match = true;
};

/// Pipeline logits synthesized on the stack's set versus the band-limited stack.
CompareReport compare(const FourierField& pipeline_logits, const CorrelationStack& stack);

nlohmann::json to_json(const CompareReport& r);

}  // namespace fourtran
