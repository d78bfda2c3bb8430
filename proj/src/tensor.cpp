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

#include "sean/tensor.hpp"

#include <atomic>
#include <cmath>

namespace sean {

std::int64_t shape_numel(const Shape& s) {
    std::int64_t n = 1;
    for (auto d : s) n *= d;
    return n;
}

std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    out += "]";
    return out;
}

bool shape_eq(const Shape& a, const Shape& b) { return a == b; }

namespace {
std::int64_t next_id() {
    static std::atomic<std::int64_t> counter{0};
    return counter.fetch_add(1, std::memory_order_relaxed);
}

thread_local bool g_grad_enabled = true;
} // namespace

Tensor::Tensor(Shape shape, double fill, bool requires_grad) {
    for (auto d : shape)
        check(d > 0, "tensor: non-positive extent ", d, " in shape ", shape_str(shape));
    impl_ = std::make_shared<detail::TensorImpl>();
    impl_->shape = std::move(shape);
    impl_->data.assign(static_cast<std::size_t>(shape_numel(impl_->shape)), fill);
    impl_->requires_grad = requires_grad;
    impl_->id = next_id();
}

Tensor Tensor::from_vector(Shape shape, std::vector<double> values, bool requires_grad) {
    check(shape_numel(shape) == static_cast<std::int64_t>(values.size()),
          "tensor: data length ", values.size(), " does not match shape ", shape_str(shape));
    Tensor t(std::move(shape), 0.0, requires_grad);
    t.impl_->data = std::move(values);
    return t;
}

Tensor Tensor::randn(Shape shape, Rng& rng, double stddev, bool requires_grad) {
    Tensor t(std::move(shape), 0.0, requires_grad);
    for (auto& v : t.impl_->data) v = stddev * rng.normal();
    return t;
}

double Tensor::value() const {
    check(numel() == 1, "tensor: value() needs a scalar, got shape ", shape_str(shape()));
    return impl_->data[0];
}

double& Tensor::at4(std::int64_t n, std::int64_t c, std::int64_t y, std::int64_t x) {
    const auto& s = impl_->shape;
    check(s.size() == 4, "tensor: at4 on rank-", s.size(), " tensor");
    return impl_->data[static_cast<std::size_t>(((n * s[1] + c) * s[2] + y) * s[3] + x)];
}

double Tensor::at4(std::int64_t n, std::int64_t c, std::int64_t y, std::int64_t x) const {
    return const_cast<Tensor*>(this)->at4(n, c, y, x);
}

std::span<const double> Tensor::grad() const {
    check(has_grad(), "tensor: grad requested but never populated (shape ",
          shape_str(shape()), ")");
    return impl_->grad;
}

std::span<double> Tensor::mutable_grad() {
    if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0);
    return impl_->grad;
}

Tensor Tensor::detach() const {
    return Tensor::from_vector(shape(), vec(), false);
}

bool Tensor::all_finite() const {
    for (double v : impl_->data)
        if (!std::isfinite(v)) return false;
    return true;
}

// --- tape ------------------------------------------------------------------

bool BackwardCtx::has_adjoint(const Tensor& t) const {
    return slots_.count(t.id()) != 0;
}

std::span<const double> BackwardCtx::adjoint(const Tensor& t) const {
    auto it = slots_.find(t.id());
    check(it != slots_.end(), "backward: missing adjoint for node ", t.id());
    return it->second.adj;
}

std::span<double> BackwardCtx::adjoint_buf(const Tensor& t) {
    auto it = slots_.find(t.id());
    if (it == slots_.end()) {
        Slot slot{t, std::vector<double>(static_cast<std::size_t>(t.numel()), 0.0)};
        it = slots_.emplace(t.id(), std::move(slot)).first;
    }
    return it->second.adj;
}

Tape& Tape::get() {
    thread_local Tape tape;
    return tape;
}

void Tape::record(const Tensor& output, BackwardFn fn) {
    entries_.push_back(Entry{output.id(), std::move(fn)});
}

void Tape::clear() { entries_.clear(); }

void backward(const Tensor& root) {
    check(root.numel() == 1, "backward: root must be scalar, got shape ",
          shape_str(root.shape()));
    BackwardCtx ctx;
    ctx.adjoint_buf(root)[0] = 1.0;

    auto& entries = Tape::get().entries_;
    for (auto it = entries.rbegin(); it != entries.rend(); ++it) {
        auto slot = ctx.slots_.find(it->output_id);
        if (slot == ctx.slots_.end()) continue;
        it->fn(ctx);
    }

    for (auto& [id, slot] : ctx.slots_) {
        (void)id;
        if (!slot.tensor.requires_grad()) continue;
        auto g = slot.tensor.mutable_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += slot.adj[i];
    }
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

bool track_grad(std::initializer_list<const Tensor*> inputs) {
    if (!g_grad_enabled) return false;
    for (const Tensor* t : inputs)
        if (t->defined() && t->requires_grad()) return true;
    return false;
}

} // namespace sean
