#pragma once

#include <array>
#include <functional>
#include <unordered_map>
#include <vector>

#include "archtx/tensor.hpp"

namespace archtx {

using VarId = int32_t;

// Reverse-mode tape over tensor primitives. One tape per traced forward pass;
// backward replays the recorded adjoints in reverse creation order, which is a
// valid reverse topological order because every primitive is created after its
// inputs. Iteration orders are fixed, so repeated runs give bit-identical
// gradients.
//
// A tape built with record=false evaluates the same arithmetic without storing
// adjoints (used for inference/eval); calling backward on it is an error.
class Tape {
public:
    explicit Tape(bool record = true) : record_(record) {}

    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    VarId constant(Tensor v);
    // Registers a trainable parameter. Repeated watch of the same Parameter
    // returns the same VarId, so gradients from all its uses accumulate
    // (this is what makes cell-tied theta rows sum over instances).
    VarId watch(Parameter& p);

    const Tensor& value(VarId v) const { return slots_[static_cast<size_t>(v)].val; }
    const Tensor& grad(VarId v) const { return slots_[static_cast<size_t>(v)].grad; }

    // -- primitives ----------------------------------------------------------
    // x:(N,C,H,W) w:(OC,C,K,K) b:(OC), same padding (pad = K/2), spatial dims
    // divided by stride with floor.
    VarId conv2d(VarId x, VarId w, VarId b, int stride);
    // x:(N,F) w:(O,F) b:(O) -> (N,O)
    VarId dense(VarId x, VarId w, VarId b);
    VarId relu(VarId x);
    // 2x2 window, stride 2, trailing odd row/col dropped.
    VarId avgpool2x2(VarId x);
    VarId add(VarId a, VarId b);
    // s must have exactly one element; out = s * x elementwise.
    VarId scale_by_scalar(VarId x, VarId s);
    // (N,C,H,W) -> (N,C)
    VarId global_avg_pool(VarId x);
    // logits:(N,K), labels in [0,K). Returns the scalar mean cross-entropy.
    VarId softmax_cross_entropy(VarId logits, const std::vector<int>& labels);
    // 1-D input; softmax over the entries with active[i]=true, inactive
    // entries come out exactly 0 and receive no gradient.
    VarId softmax_masked(VarId v, const std::vector<bool>& active);
    // Scalar view of element i.
    VarId pick(VarId v, int index);
    VarId reshape(VarId x, Shape target);
    VarId zeros(Shape s);

    // Populates .grad on every watched Parameter (zero for unreachable ones)
    // and consumes the tape.
    void backward(VarId loss);

    bool recording() const { return record_; }
    size_t num_vars() const { return slots_.size(); }

private:
    struct Slot {
        Tensor val;
        Tensor grad;  // allocated lazily on first accumulation
    };

    VarId fresh(Tensor v);
    Tensor& grad_slot(VarId v);
    void accumulate(VarId v, int64_t index, double g);

    std::vector<Slot> slots_;
    std::vector<std::function<void(Tape&)>> adjoints_;
    std::vector<std::pair<Parameter*, VarId>> watched_;
    std::unordered_map<Parameter*, VarId> watch_index_;
    bool record_ = true;
    bool consumed_ = false;
};

}  // namespace archtx
