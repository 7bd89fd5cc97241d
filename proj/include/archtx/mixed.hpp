#pragma once

#include <memory>
#include <string>
#include <vector>

#include "archtx/graph.hpp"
#include "archtx/tape.hpp"

namespace archtx {

// `raw` uses the theta values verbatim as combination coefficients (the
// literal per-edge form: theta_none * Z + theta_id * x + theta_same * o(x)).
// `softmax` normalizes the unmasked entries first so all three choices
// compete through the gradient; argmax is unchanged between the two.
enum class Parameterization { raw, softmax };

// cell: one theta row per template edge position, shared across instances.
// full: one row per edge instance. off: no theta training at all (baseline).
enum class TransformMode { cell, full, off };

std::string to_string(Parameterization p);
Parameterization parameterization_from_string(const std::string& s);
std::string to_string(TransformMode m);
TransformMode transform_mode_from_string(const std::string& s);

// One trainable (none, id, same) triple. Initialization is exactly (0,0,1) so
// the freshly mixed network computes what the original network computes. When
// mask_id is false the id entry is frozen at 0, contributes nothing to the
// forward value, and is excluded from argmax.
struct ThetaRow {
    Parameter theta;
    bool mask_id;

    ThetaRow(std::string id, bool id_legal)
        : theta(std::move(id), Tensor({3}, {0.0, 0.0, 1.0})), mask_id(!id_legal) {}
};

struct Coefficients {
    double c_none = 0.0, c_id = 0.0, c_same = 0.0;
};

Coefficients coefficients(const ThetaRow& row, Parameterization mode);

class ThetaTable {
public:
    // Builds rows for every edge of the network, tied per template edge in
    // cell mode. `off` yields an empty table.
    static ThetaTable build(const Network& net, TransformMode tying);

    TransformMode tying() const { return tying_; }
    size_t size() const { return rows_.size(); }
    ThetaRow& row(size_t i) { return *rows_[i]; }
    const ThetaRow& row(size_t i) const { return *rows_[i]; }
    ThetaRow& row_for_edge(int edge_id) { return *rows_[static_cast<size_t>(row_of_edge_.at(edge_id))]; }
    const ThetaRow& row_for_edge(int edge_id) const { return *rows_[static_cast<size_t>(row_of_edge_.at(edge_id))]; }
    bool has_edge(int edge_id) const { return row_of_edge_.count(edge_id) > 0; }

    std::vector<Parameter*> parameters() {
        std::vector<Parameter*> out;
        out.reserve(rows_.size());
        for (auto& r : rows_) out.push_back(&r->theta);
        return out;
    }

private:
    TransformMode tying_ = TransformMode::off;
    std::vector<std::unique_ptr<ThetaRow>> rows_;  // stable addresses; rows are watched by tapes
    std::map<int, int> row_of_edge_;
};

// Eq.-1 edge output: c_none*Z + c_id*x + c_same*o(x). The zero tensor is
// never materialized; its only role is shape. `apply_op` computes o(x).
// Masked rows drop the x term entirely.
template <typename ApplyOp>
VarId mixed_forward(Tape& tape, VarId x, ThetaRow& row, Parameterization mode, ApplyOp&& apply_op) {
    if (!tape.value(x).finite()) {
        throw Error("mixed edge input is not finite (" + row.theta.id + ")");
    }
    VarId theta = tape.watch(row.theta);
    VarId ox = apply_op(x);
    if (mode == Parameterization::raw) {
        VarId out = tape.scale_by_scalar(ox, tape.pick(theta, 2));
        if (!row.mask_id) {
            out = tape.add(out, tape.scale_by_scalar(x, tape.pick(theta, 1)));
        }
        return out;
    }
    std::vector<bool> active{true, !row.mask_id, true};
    VarId coef = tape.softmax_masked(theta, active);
    VarId out = tape.scale_by_scalar(ox, tape.pick(coef, 2));
    if (!row.mask_id) {
        out = tape.add(out, tape.scale_by_scalar(x, tape.pick(coef, 1)));
    }
    return out;
}

}  // namespace archtx
