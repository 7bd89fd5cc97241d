#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "archtx/error.hpp"

namespace archtx {

using Shape = std::vector<int>;

inline int64_t numel(const Shape& s) {
    int64_t n = 1;
    for (int d : s) {
        n *= d;
    }
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::string out = "(";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(s[i]);
    }
    return out + ")";
}

// Dense row-major 64-bit array. 64-bit is the default everywhere: the exact
// gradient checks and the bitwise init-equivalence check need the headroom.
struct Tensor {
    Shape shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(Shape s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
        if (static_cast<int64_t>(data.size()) != numel(shape)) {
            throw ShapeError("tensor data length does not match shape " + shape_str(shape));
        }
    }

    static Tensor zeros(Shape s) {
        Tensor t;
        t.shape = std::move(s);
        t.data.assign(static_cast<size_t>(numel(t.shape)), 0.0);
        return t;
    }

    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    int64_t size() const { return static_cast<int64_t>(data.size()); }

    double& operator[](int64_t i) { return data[static_cast<size_t>(i)]; }
    double operator[](int64_t i) const { return data[static_cast<size_t>(i)]; }

    void fill(double v) {
        for (auto& x : data) x = v;
    }

    bool finite() const {
        for (double x : data) {
            if (!std::isfinite(x)) return false;
        }
        return true;
    }
};

// Trainable array plus its gradient slot. The gradient is zeroed at the start
// of every backward pass, so an unused parameter reads exactly 0 afterwards.
struct Parameter {
    std::string id;
    Tensor value;
    Tensor grad;

    Parameter(std::string name, Tensor v) : id(std::move(name)), value(std::move(v)) {
        grad = Tensor::zeros(value.shape);
    }
};

}  // namespace archtx
