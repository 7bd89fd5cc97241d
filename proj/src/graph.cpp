#include "archtx/graph.hpp"

#include <algorithm>
#include <queue>

namespace archtx {

std::string to_string(OpKind k) {
    switch (k) {
        case OpKind::Conv3x3ReLU: return "conv3x3_relu";
        case OpKind::Conv1x1ReLU: return "conv1x1_relu";
        case OpKind::DenseReLU: return "dense_relu";
        case OpKind::AvgPool2x2: return "avgpool2x2";
        case OpKind::Identity: return "identity";
        case OpKind::Zero: return "zero";
    }
    return "?";
}

OpKind op_kind_from_string(const std::string& s) {
    if (s == "conv3x3_relu") return OpKind::Conv3x3ReLU;
    if (s == "conv1x1_relu") return OpKind::Conv1x1ReLU;
    if (s == "dense_relu") return OpKind::DenseReLU;
    if (s == "avgpool2x2") return OpKind::AvgPool2x2;
    if (s == "identity") return OpKind::Identity;
    if (s == "zero") return OpKind::Zero;
    throw ConfigError("unknown operation kind '" + s + "'");
}

int64_t op_param_count(const OperationSpec& op) {
    switch (op.kind) {
        case OpKind::Conv3x3ReLU:
            return static_cast<int64_t>(op.in_channels) * op.out_channels * 9 + op.out_channels;
        case OpKind::Conv1x1ReLU:
            return static_cast<int64_t>(op.in_channels) * op.out_channels + op.out_channels;
        case OpKind::DenseReLU:
            return static_cast<int64_t>(op.in_channels) * op.out_channels + op.out_channels;
        case OpKind::AvgPool2x2:
        case OpKind::Identity:
        case OpKind::Zero:
            return 0;
    }
    return 0;
}

bool identity_legal(const OperationSpec& op) {
    switch (op.kind) {
        case OpKind::Identity:
            return true;
        case OpKind::Conv3x3ReLU:
        case OpKind::Conv1x1ReLU:
            return op.stride == 1 && op.in_channels == op.out_channels;
        case OpKind::DenseReLU:
        case OpKind::AvgPool2x2:
        case OpKind::Zero:
            return false;
    }
    return false;
}

// Output shape of one op for a per-sample (C,H,W) input.
static Shape op_out_shape(const OperationSpec& op, const Shape& in) {
    if (in.size() != 3) {
        throw ShapeError("edge input must be (C,H,W), got " + shape_str(in));
    }
    const int c = in[0], h = in[1], w = in[2];
    switch (op.kind) {
        case OpKind::Conv3x3ReLU:
        case OpKind::Conv1x1ReLU:
            if (op.in_channels != c) {
                throw ShapeError("conv expects " + std::to_string(op.in_channels) + " channels, got " + shape_str(in));
            }
            return {op.out_channels, h / op.stride, w / op.stride};
        case OpKind::DenseReLU:
            if (static_cast<int64_t>(op.in_channels) != numel(in)) {
                throw ShapeError("dense expects " + std::to_string(op.in_channels) + " features, got " + shape_str(in));
            }
            return {op.out_channels, 1, 1};
        case OpKind::AvgPool2x2:
            if (op.in_channels != c) {
                throw ShapeError("avgpool expects " + std::to_string(op.in_channels) + " channels, got " + shape_str(in));
            }
            return {c, h / 2, w / 2};
        case OpKind::Identity:
            return in;
        case OpKind::Zero:
            if (op.stride == 0) return {op.out_channels, 1, 1};
            return {op.out_channels, h / op.stride, w / op.stride};
    }
    return in;
}

// ---------------------------------------------------------------------------

static OperationSpec conv3(int in, int out, int stride = 1) {
    return {OpKind::Conv3x3ReLU, in, out, stride};
}
static OperationSpec conv1(int in, int out, int stride = 1) {
    return {OpKind::Conv1x1ReLU, in, out, stride};
}

// Shared 4-edge cell body: 0 -> 1 -> 2 -> 3 chain plus a 0 -> 2 shortcut.
static CellTemplate four_edge_cell(const std::string& name, int channels) {
    CellTemplate t;
    t.name = name;
    t.num_nodes = 4;
    t.edges = {
        {0, 1, conv3(channels, channels)},
        {0, 2, conv1(channels, channels)},
        {1, 2, conv3(channels, channels)},
        {2, 3, conv1(channels, channels)},
    };
    return t;
}

static CellTemplate residual_cell(const std::string& name, int channels) {
    CellTemplate t;
    t.name = name;
    t.num_nodes = 3;
    t.edges = {
        {0, 1, conv3(channels, channels)},
        {1, 2, conv3(channels, channels)},
        {0, 2, {OpKind::Identity, channels, channels, 1}},
    };
    return t;
}

static CellTemplate reduce_cell(const std::string& name, int in, int out) {
    CellTemplate t;
    t.name = name;
    t.num_nodes = 3;
    t.edges = {
        {0, 1, conv3(in, out, 2)},
        {1, 2, conv3(out, out)},
        {0, 2, conv1(in, out, 2)},
    };
    return t;
}

Network build_network(const std::string& template_name, const NetworkConfig& config) {
    if (config.channels <= 0 || config.classes <= 0 || config.cells <= 0) {
        throw ConfigError("channel/cell/class counts must be positive");
    }
    if (config.input.size() != 3 || config.input[0] <= 0 || config.input[1] <= 0 || config.input[2] <= 0) {
        throw ConfigError("input shape must be a positive (C,H,W)");
    }

    Network net;
    net.template_name = template_name;
    net.input_shape = config.input;
    net.num_classes = config.classes;
    net.stem = conv3(config.input[0], config.channels);

    auto instantiate = [&net](int template_id) {
        Cell cell;
        cell.template_id = template_id;
        cell.num_nodes = net.templates[static_cast<size_t>(template_id)].num_nodes;
        for (const EdgeDef& e : net.templates[static_cast<size_t>(template_id)].edges) {
            cell.edges.push_back(Edge{net.edge_id_count++, e.src, e.dst, e.op});
        }
        net.cells.push_back(std::move(cell));
    };

    if (template_name == "tiny") {
        net.templates.push_back(four_edge_cell("cell", config.channels));
        instantiate(0);
        net.head = {config.channels, config.classes};
    } else if (template_name == "plain-cnn") {
        net.templates.push_back(four_edge_cell("cell", config.channels));
        for (int i = 0; i < config.cells; ++i) instantiate(0);
        net.head = {config.channels, config.classes};
    } else if (template_name == "resnet-mini") {
        const int c = config.channels;
        net.templates.push_back(residual_cell("res", c));
        net.templates.push_back(reduce_cell("reduce", c, 2 * c));
        net.templates.push_back(residual_cell("res-wide", 2 * c));
        for (int i = 0; i < config.cells; ++i) instantiate(0);
        instantiate(1);
        for (int i = 0; i < config.cells; ++i) instantiate(2);
        net.head = {2 * c, config.classes};
    } else {
        throw ConfigError("unknown network template '" + template_name + "'");
    }
    return net;
}

// ---------------------------------------------------------------------------

static bool cell_acyclic(const Cell& cell) {
    std::vector<int> indeg(static_cast<size_t>(cell.num_nodes), 0);
    for (const Edge& e : cell.edges) {
        if (e.src < 0 || e.src >= cell.num_nodes || e.dst < 0 || e.dst >= cell.num_nodes) return false;
        ++indeg[static_cast<size_t>(e.dst)];
    }
    std::queue<int> q;
    for (int v = 0; v < cell.num_nodes; ++v) {
        if (indeg[static_cast<size_t>(v)] == 0) q.push(v);
    }
    int seen = 0;
    while (!q.empty()) {
        int v = q.front();
        q.pop();
        ++seen;
        for (const Edge& e : cell.edges) {
            if (e.src == v && --indeg[static_cast<size_t>(e.dst)] == 0) q.push(e.dst);
        }
    }
    return seen == cell.num_nodes;
}

static std::vector<bool> reachable_from(const Cell& cell, int start, bool follow_forward,
                                        bool skip_zero) {
    std::vector<bool> seen(static_cast<size_t>(cell.num_nodes), false);
    seen[static_cast<size_t>(start)] = true;
    std::queue<int> q;
    q.push(start);
    while (!q.empty()) {
        int v = q.front();
        q.pop();
        for (const Edge& e : cell.edges) {
            if (skip_zero && e.op.kind == OpKind::Zero) continue;
            const int from = follow_forward ? e.src : e.dst;
            const int to = follow_forward ? e.dst : e.src;
            if (from == v && !seen[static_cast<size_t>(to)]) {
                seen[static_cast<size_t>(to)] = true;
                q.push(to);
            }
        }
    }
    return seen;
}

ValidationReport validate(const Network& net) {
    ValidationReport rep;
    for (size_t ci = 0; ci < net.cells.size(); ++ci) {
        if (!cell_acyclic(net.cells[ci])) {
            rep.acyclic = false;
            rep.findings.push_back("cell " + std::to_string(ci) + " is not acyclic");
        }
    }
    if (rep.acyclic) {
        try {
            infer_shapes(net);
        } catch (const ShapeError& e) {
            rep.shapes_ok = false;
            rep.findings.push_back(e.what());
        }
        for (size_t ci = 0; ci < net.cells.size(); ++ci) {
            const Cell& cell = net.cells[ci];
            auto fwd = reachable_from(cell, 0, true, true);
            if (!fwd[static_cast<size_t>(cell.num_nodes - 1)]) {
                rep.connected = false;
                rep.findings.push_back("cell " + std::to_string(ci) +
                                       ": no non-zero path from input to output node " +
                                       std::to_string(cell.num_nodes - 1));
            }
        }
    }
    return rep;
}

std::vector<Shape> cell_node_shapes(const Network& net, const Cell& cell, const Shape& in_shape) {
    // Node shapes come from the cell's template; decisions only substitute
    // shape-preserving ops, so instance edges are checked against them below.
    const CellTemplate& tmpl = net.templates[static_cast<size_t>(cell.template_id)];
    std::vector<Shape> shapes(static_cast<size_t>(cell.num_nodes));
    shapes[0] = in_shape;
    std::vector<bool> known(static_cast<size_t>(cell.num_nodes), false);
    known[0] = true;
    bool progress = true;
    while (progress) {
        progress = false;
        for (const EdgeDef& e : tmpl.edges) {
            if (!known[static_cast<size_t>(e.src)]) continue;
            Shape out = op_out_shape(e.op, shapes[static_cast<size_t>(e.src)]);
            if (!known[static_cast<size_t>(e.dst)]) {
                shapes[static_cast<size_t>(e.dst)] = out;
                known[static_cast<size_t>(e.dst)] = true;
                progress = true;
            } else if (shapes[static_cast<size_t>(e.dst)] != out) {
                throw ShapeError("summing " + shape_str(out) + " with " +
                                 shape_str(shapes[static_cast<size_t>(e.dst)]) + " at node " +
                                 std::to_string(e.dst));
            }
        }
    }
    for (int v = 0; v < cell.num_nodes; ++v) {
        if (!known[static_cast<size_t>(v)]) {
            throw ShapeError("node " + std::to_string(v) + " has no defined shape");
        }
    }
    return shapes;
}

std::map<int, EdgeShapes> infer_shapes(const Network& net) {
    std::map<int, EdgeShapes> out;
    Shape cur = {net.stem.out_channels, net.input_shape[1] / net.stem.stride,
                 net.input_shape[2] / net.stem.stride};
    for (const Cell& cell : net.cells) {
        auto shapes = cell_node_shapes(net, cell, cur);
        for (const Edge& e : cell.edges) {
            Shape eo = op_out_shape(e.op, shapes[static_cast<size_t>(e.src)]);
            if (eo != shapes[static_cast<size_t>(e.dst)]) {
                throw ShapeError("edge " + std::to_string(e.id) + " produces " + shape_str(eo) +
                                 " but node " + std::to_string(e.dst) + " aggregates " +
                                 shape_str(shapes[static_cast<size_t>(e.dst)]));
            }
            out[e.id] = EdgeShapes{shapes[static_cast<size_t>(e.src)], eo};
        }
        cur = shapes[static_cast<size_t>(cell.num_nodes - 1)];
    }
    return out;
}

static int64_t op_flops(const OperationSpec& op, const Shape& in) {
    const Shape out = op_out_shape(op, in);
    switch (op.kind) {
        case OpKind::Conv3x3ReLU:
            return static_cast<int64_t>(out[0]) * out[1] * out[2] * op.in_channels * 9;
        case OpKind::Conv1x1ReLU:
            return static_cast<int64_t>(out[0]) * out[1] * out[2] * op.in_channels;
        case OpKind::DenseReLU:
            return static_cast<int64_t>(op.in_channels) * op.out_channels;
        case OpKind::AvgPool2x2:
            return static_cast<int64_t>(out[0]) * out[1] * out[2] * 4;
        case OpKind::Identity:
        case OpKind::Zero:
            return 0;
    }
    return 0;
}

CostReport count_cost(const Network& net) {
    CostReport cost;
    cost.params += op_param_count(net.stem);
    Shape stem_out = {net.stem.out_channels, net.input_shape[1] / net.stem.stride,
                      net.input_shape[2] / net.stem.stride};
    cost.flops += op_flops(net.stem, net.input_shape);

    Shape cur = stem_out;
    for (const Cell& cell : net.cells) {
        auto shapes = cell_node_shapes(net, cell, cur);
        for (const Edge& e : cell.edges) {
            cost.params += op_param_count(e.op);
            cost.flops += op_flops(e.op, shapes[static_cast<size_t>(e.src)]);
        }
        cur = shapes[static_cast<size_t>(cell.num_nodes - 1)];
    }
    // head: global average pool + dense classifier
    cost.flops += static_cast<int64_t>(cur[0]) * cur[1] * cur[2];
    cost.params += static_cast<int64_t>(net.head.in_channels) * net.head.num_classes + net.head.num_classes;
    cost.flops += static_cast<int64_t>(net.head.in_channels) * net.head.num_classes;
    return cost;
}

// ---------------------------------------------------------------------------

Network apply_decisions(const Network& net, const Decisions& d) {
    size_t covered = 0;
    Network out = net;
    for (Cell& cell : out.cells) {
        for (Edge& e : cell.edges) {
            auto it = d.by_edge.find(e.id);
            if (it == d.by_edge.end()) {
                throw DecisionError("no decision for edge " + std::to_string(e.id));
            }
            ++covered;
            switch (it->second.choice) {
                case Choice::same:
                    break;
                case Choice::id:
                    if (!identity_legal(e.op)) {
                        throw ShapeError("illegal identity decision on shape-changing edge " +
                                         std::to_string(e.id));
                    }
                    e.op = {OpKind::Identity, e.op.in_channels, e.op.in_channels, 1};
                    break;
                case Choice::none: {
                    int stride = e.op.stride;
                    if (e.op.kind == OpKind::AvgPool2x2) stride = 2;
                    if (e.op.kind == OpKind::DenseReLU) stride = 0;
                    e.op = {OpKind::Zero, e.op.in_channels, e.op.out_channels, stride};
                    break;
                }
            }
        }
    }
    if (covered != d.by_edge.size()) {
        throw DecisionError("decisions reference unknown edges");
    }
    return prune(out);
}

Network prune(const Network& net) {
    Network out = net;
    for (Cell& cell : out.cells) {
        Cell live = cell;
        live.edges.clear();
        for (const Edge& e : cell.edges) {
            if (e.op.kind != OpKind::Zero) live.edges.push_back(e);
        }
        // An edge survives iff it sits on some input-to-output path.
        auto fwd = reachable_from(live, 0, true, true);
        auto bwd = reachable_from(live, live.num_nodes - 1, false, true);
        std::vector<Edge> kept;
        for (const Edge& e : live.edges) {
            if (fwd[static_cast<size_t>(e.src)] && bwd[static_cast<size_t>(e.dst)]) {
                kept.push_back(e);
            }
        }
        cell.edges = std::move(kept);
    }
    return out;
}

ArchDiff diff(const Network& original, const Network& transformed) {
    std::map<int, OpKind> orig, trans;
    for (const Cell& c : original.cells) {
        for (const Edge& e : c.edges) orig[e.id] = e.op.kind;
    }
    for (const Cell& c : transformed.cells) {
        for (const Edge& e : c.edges) {
            if (!orig.count(e.id)) {
                throw DecisionError("transformed network has edge " + std::to_string(e.id) +
                                    " outside the original id space");
            }
            trans[e.id] = e.op.kind;
        }
    }
    ArchDiff out;
    for (const auto& [id, kind] : orig) {
        ArchDiffEntry entry;
        entry.edge_id = id;
        entry.original_kind = kind;
        auto it = trans.find(id);
        entry.new_kind = it == trans.end() ? OpKind::Zero : it->second;  // removed -> Zero
        entry.changed = entry.new_kind != entry.original_kind;
        out.entries.push_back(entry);
    }
    return out;
}

}  // namespace archtx
