#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

namespace archtx {

// Per-edge discrete choice after argmax over theta.
enum class Choice { none, id, same };

inline std::string to_string(Choice c) {
    switch (c) {
        case Choice::none: return "none";
        case Choice::id: return "id";
        case Choice::same: return "same";
    }
    return "?";
}

struct DecisionInfo {
    Choice choice = Choice::same;
    std::array<double, 3> theta{0.0, 0.0, 1.0};  // (none, id, same) snapshot
    bool repaired = false;
};

struct Decisions {
    std::map<int, DecisionInfo> by_edge;       // keyed by global edge id
    std::vector<int> repaired;                 // edges whose `none` was overridden

    bool operator==(const Decisions& other) const {
        if (by_edge.size() != other.by_edge.size()) return false;
        for (const auto& [id, info] : by_edge) {
            auto it = other.by_edge.find(id);
            if (it == other.by_edge.end() || it->second.choice != info.choice) return false;
        }
        return true;
    }
};

}  // namespace archtx
