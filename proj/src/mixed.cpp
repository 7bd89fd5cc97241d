#include "archtx/mixed.hpp"

#include <cmath>

namespace archtx {

std::string to_string(Parameterization p) {
    return p == Parameterization::raw ? "raw" : "softmax";
}

Parameterization parameterization_from_string(const std::string& s) {
    if (s == "raw") return Parameterization::raw;
    if (s == "softmax") return Parameterization::softmax;
    throw ConfigError("unknown parameterization '" + s + "'");
}

std::string to_string(TransformMode m) {
    switch (m) {
        case TransformMode::cell: return "cell";
        case TransformMode::full: return "full";
        case TransformMode::off: return "off";
    }
    return "?";
}

TransformMode transform_mode_from_string(const std::string& s) {
    if (s == "cell") return TransformMode::cell;
    if (s == "full") return TransformMode::full;
    if (s == "off") return TransformMode::off;
    throw ConfigError("unknown transform mode '" + s + "'");
}

Coefficients coefficients(const ThetaRow& row, Parameterization mode) {
    const auto& t = row.theta.value.data;
    if (mode == Parameterization::raw) {
        return {t[0], row.mask_id ? 0.0 : t[1], t[2]};
    }
    double mx = std::max(t[0], t[2]);
    if (!row.mask_id) mx = std::max(mx, t[1]);
    const double en = std::exp(t[0] - mx);
    const double ei = row.mask_id ? 0.0 : std::exp(t[1] - mx);
    const double es = std::exp(t[2] - mx);
    const double denom = en + ei + es;
    return {en / denom, ei / denom, es / denom};
}

ThetaTable ThetaTable::build(const Network& net, TransformMode tying) {
    ThetaTable table;
    table.tying_ = tying;
    if (tying == TransformMode::off) {
        return table;
    }
    if (tying == TransformMode::full) {
        for (const Cell& cell : net.cells) {
            for (const Edge& e : cell.edges) {
                table.row_of_edge_[e.id] = static_cast<int>(table.rows_.size());
                table.rows_.push_back(std::make_unique<ThetaRow>(
                    "theta.e" + std::to_string(e.id), identity_legal(e.op)));
            }
        }
        return table;
    }
    // cell mode: one row per (template, edge position), shared by instances
    std::map<std::pair<int, int>, int> row_of_slot;
    for (const Cell& cell : net.cells) {
        for (size_t k = 0; k < cell.edges.size(); ++k) {
            auto slot = std::make_pair(cell.template_id, static_cast<int>(k));
            auto it = row_of_slot.find(slot);
            if (it == row_of_slot.end()) {
                it = row_of_slot
                         .emplace(slot, static_cast<int>(table.rows_.size()))
                         .first;
                table.rows_.push_back(std::make_unique<ThetaRow>(
                    "theta.t" + std::to_string(slot.first) + ".e" + std::to_string(slot.second),
                    identity_legal(cell.edges[k].op)));
            }
            table.row_of_edge_[cell.edges[k].id] = it->second;
        }
    }
    return table;
}

}  // namespace archtx
