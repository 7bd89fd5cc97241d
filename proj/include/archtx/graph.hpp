#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "archtx/decisions.hpp"
#include "archtx/error.hpp"
#include "archtx/tensor.hpp"

namespace archtx {

// The operation catalog. Identity and Zero carry no trainable weights.
enum class OpKind { Conv3x3ReLU, Conv1x1ReLU, DenseReLU, AvgPool2x2, Identity, Zero };

std::string to_string(OpKind k);
OpKind op_kind_from_string(const std::string& s);

struct OperationSpec {
    OpKind kind = OpKind::Identity;
    int in_channels = 0;
    int out_channels = 0;
    int stride = 1;  // spatial ops; 0 marks a Zero edge that replaced a dense op

    bool operator==(const OperationSpec&) const = default;
};

int64_t op_param_count(const OperationSpec& op);
// Whether substituting Identity on an edge carrying this op keeps shapes
// legal. Decidable from the spec alone for this catalog: stride-1,
// channel-preserving convs and Identity itself qualify; pools, dense and
// strided ops never do.
bool identity_legal(const OperationSpec& op);

struct EdgeDef {
    int src = 0;
    int dst = 0;
    OperationSpec op;
};

// A cell is a DAG over nodes 0..num_nodes-1 with node 0 the input and
// num_nodes-1 the output. Incoming edge outputs are summed at each node.
struct CellTemplate {
    std::string name;
    int num_nodes = 0;
    std::vector<EdgeDef> edges;
};

struct Edge {
    int id = 0;  // global edge id, stable across rewrites
    int src = 0;
    int dst = 0;
    OperationSpec op;
};

struct Cell {
    int template_id = 0;
    int num_nodes = 0;
    std::vector<Edge> edges;
};

struct HeadSpec {
    int in_channels = 0;
    int num_classes = 0;
};

struct NetworkConfig {
    int channels = 8;
    int cells = 2;  // cells for plain-cnn; cells per stage for resnet-mini
    int classes = 10;
    Shape input{3, 16, 16};
};

// Immutable after construction; every rewrite produces a new value.
struct Network {
    std::string template_name;
    std::vector<CellTemplate> templates;
    std::vector<Cell> cells;
    OperationSpec stem;
    HeadSpec head;
    Shape input_shape;  // (C,H,W)
    int num_classes = 0;
    int edge_id_count = 0;  // size of the original edge-id space

    int num_edges() const {
        int n = 0;
        for (const auto& c : cells) n += static_cast<int>(c.edges.size());
        return n;
    }
};

Network build_network(const std::string& template_name, const NetworkConfig& config);

struct ValidationReport {
    bool acyclic = true;
    bool shapes_ok = true;
    bool connected = true;
    std::vector<std::string> findings;

    bool ok() const { return acyclic && shapes_ok; }
};

// Reports acyclicity, shape consistency, and whether a path of non-Zero edges
// reaches the classifier head. Never throws; findings carry the detail.
ValidationReport validate(const Network& net);

struct EdgeShapes {
    Shape in, out;  // per-sample (C,H,W)
};

// Per-sample shapes for every edge; throws ShapeError on an inconsistent sum.
std::map<int, EdgeShapes> infer_shapes(const Network& net);
// Node shapes for one cell given its input shape (used by the forward pass).
std::vector<Shape> cell_node_shapes(const Network& net, const Cell& cell, const Shape& in_shape);

struct CostReport {
    int64_t params = 0;
    int64_t flops = 0;  // multiply-accumulates for one forward pass of one input
};

CostReport count_cost(const Network& net);

// Rewrites per decisions (same -> unchanged, id -> Identity, none -> Zero),
// then prunes. Throws DecisionError on an unknown edge, ShapeError on an
// illegal Identity.
Network apply_decisions(const Network& net, const Decisions& d);

// Drops Zero edges, then every node/edge not on an input-to-output path.
// Idempotent; cell input and output nodes always survive.
Network prune(const Network& net);

struct ArchDiffEntry {
    int edge_id = 0;
    OpKind original_kind = OpKind::Identity;
    OpKind new_kind = OpKind::Identity;
    bool changed = false;
};

struct ArchDiff {
    std::vector<ArchDiffEntry> entries;  // one per original edge, removed edges report Zero

    int changed_count() const {
        int n = 0;
        for (const auto& e : entries) n += e.changed ? 1 : 0;
        return n;
    }
};

ArchDiff diff(const Network& original, const Network& transformed);

}  // namespace archtx
