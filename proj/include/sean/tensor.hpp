// Copyright (c) 2026 the sean-lib authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SEAN_TENSOR_HPP
#define SEAN_TENSOR_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "sean/common.hpp"
#include "sean/rng.hpp"

namespace sean {

using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);
bool shape_eq(const Shape& a, const Shape& b);

namespace detail {
struct TensorImpl {
    Shape shape;
    std::vector<double> data;
    bool requires_grad = false;
    std::vector<double> grad; // empty means "no grad yet"
    std::int64_t id;
};
} // namespace detail

// Dense row-major f64 tensor. Copies of a Tensor share storage; all ops are
// out-of-place, so shared storage is never mutated behind a reader's back
// (the one exception, Adam's in-place parameter update, happens outside any
// recorded graph).
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0, bool requires_grad = false);

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
    static Tensor full(Shape shape, double v) { return Tensor(std::move(shape), v); }
    static Tensor scalar(double v) { return Tensor(Shape{1}, v); }
    static Tensor from_vector(Shape shape, std::vector<double> values,
                              bool requires_grad = false);
    static Tensor randn(Shape shape, Rng& rng, double stddev = 1.0,
                        bool requires_grad = false);

    bool defined() const { return impl_ != nullptr; }
    const Shape& shape() const { return impl_->shape; }
    std::int64_t rank() const { return static_cast<std::int64_t>(impl_->shape.size()); }
    std::int64_t dim(std::int64_t i) const { return impl_->shape[static_cast<std::size_t>(i)]; }
    std::int64_t numel() const { return static_cast<std::int64_t>(impl_->data.size()); }

    double* data() { return impl_->data.data(); }
    const double* data() const { return impl_->data.data(); }
    std::vector<double>& vec() { return impl_->data; }
    const std::vector<double>& vec() const { return impl_->data; }

    // scalar extraction; requires numel() == 1
    double value() const;

    // element accessors for [N,C,H,W] and lower ranks (test/debug convenience)
    double& at4(std::int64_t n, std::int64_t c, std::int64_t y, std::int64_t x);
    double at4(std::int64_t n, std::int64_t c, std::int64_t y, std::int64_t x) const;

    bool requires_grad() const { return impl_->requires_grad; }
    void set_requires_grad(bool v) { impl_->requires_grad = v; }

    bool has_grad() const { return !impl_->grad.empty(); }
    std::span<const double> grad() const;
    // lazily allocates a zeroed buffer
    std::span<double> mutable_grad();
    void zero_grad() { impl_->grad.clear(); }

    // value snapshot detached from the graph
    Tensor detach() const;

    bool all_finite() const;

    std::int64_t id() const { return impl_->id; }

private:
    std::shared_ptr<detail::TensorImpl> impl_;
};

// ---------------------------------------------------------------------------
// Reverse-mode tape.
//
// Each differentiable op appends one entry, in execution order, holding the
// output's node id and a closure that moves adjoints from the output to the
// inputs. backward(root) walks the tape in reverse; an entry fires only if
// its output has picked up an adjoint, which restricts the sweep to the
// subgraph that actually feeds the root. Adjoints live in a per-call scratch
// map, and only at the end are they added into the persistent .grad buffers,
// so repeated backward calls accumulate and unrelated graphs on the same
// tape never contaminate each other.
// ---------------------------------------------------------------------------

class BackwardCtx {
public:
    bool has_adjoint(const Tensor& t) const;
    // adjoint of an op output; valid only while the entry's closure runs
    std::span<const double> adjoint(const Tensor& t) const;
    // accumulation buffer for an op input (allocated zeroed on first touch)
    std::span<double> adjoint_buf(const Tensor& t);

private:
    friend void backward(const Tensor& root);
    struct Slot {
        Tensor tensor;
        std::vector<double> adj;
    };
    std::unordered_map<std::int64_t, Slot> slots_;
};

using BackwardFn = std::function<void(BackwardCtx&)>;

class Tape {
public:
    static Tape& get();

    void record(const Tensor& output, BackwardFn fn);
    void clear();
    std::size_t size() const { return entries_.size(); }

private:
    friend void backward(const Tensor& root);
    struct Entry {
        std::int64_t output_id;
        BackwardFn fn;
    };
    std::vector<Entry> entries_;
};

// Populates .grad of every requires_grad tensor reachable from root.
// root must be scalar (numel() == 1).
void backward(const Tensor& root);

bool grad_enabled();

// Disables tape recording for its scope (inference / detached passes).
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

// true when recording is on and at least one input needs gradients
bool track_grad(std::initializer_list<const Tensor*> inputs);

} // namespace sean

#endif // SEAN_TENSOR_HPP
