#pragma once

#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "archtx/tensor.hpp"

namespace archtx {

// v <- momentum*v + grad; value <- value - lr*v
class SgdMomentum {
public:
    SgdMomentum(double lr, double momentum) : lr_(lr), momentum_(momentum) {}

    void set_lr(double lr) { lr_ = lr; }
    double lr() const { return lr_; }

    void step(const std::vector<Parameter*>& params) {
        for (Parameter* p : params) {
            Tensor& v = velocity_.try_emplace(p->id, Tensor::zeros(p->value.shape)).first->second;
            for (size_t i = 0; i < v.data.size(); ++i) {
                v.data[i] = momentum_ * v.data[i] + p->grad.data[i];
                p->value.data[i] -= lr_ * v.data[i];
            }
        }
    }

private:
    double lr_;
    double momentum_;
    std::unordered_map<std::string, Tensor> velocity_;
};

// Standard bias-corrected adaptive-moment update.
class Adam {
public:
    Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(const std::vector<Parameter*>& params) {
        ++t_;
        const double c1 = 1.0 - std::pow(beta1_, t_);
        const double c2 = 1.0 - std::pow(beta2_, t_);
        for (Parameter* p : params) {
            State& st = state_.try_emplace(p->id, State{Tensor::zeros(p->value.shape), Tensor::zeros(p->value.shape)}).first->second;
            for (size_t i = 0; i < p->value.data.size(); ++i) {
                const double g = p->grad.data[i];
                st.m.data[i] = beta1_ * st.m.data[i] + (1.0 - beta1_) * g;
                st.v.data[i] = beta2_ * st.v.data[i] + (1.0 - beta2_) * g * g;
                const double mhat = st.m.data[i] / c1;
                const double vhat = st.v.data[i] / c2;
                p->value.data[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
            }
        }
    }

private:
    struct State {
        Tensor m, v;
    };
    double lr_, beta1_, beta2_, eps_;
    int64_t t_ = 0;
    std::unordered_map<std::string, State> state_;
};

}  // namespace archtx
