// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "chanpred/errors.hpp"
#include "chanpred/rng.hpp"

namespace chanpred {

using Shape = std::vector<long long>;

namespace detail {

// Process-wide accounting of live tensor payload bytes. The high-water
// mark backs the peak-memory estimate reported by the benchmark harness.
struct MemTracker {
    static std::atomic<long long>& current() {
        static std::atomic<long long> bytes{0};
        return bytes;
    }
    static std::atomic<long long>& peak() {
        static std::atomic<long long> bytes{0};
        return bytes;
    }
    static void add(long long n) {
        const long long now = current().fetch_add(n) + n;
        long long prev = peak().load();
        while (now > prev && !peak().compare_exchange_weak(prev, now)) {
        }
    }
    static void sub(long long n) { current().fetch_sub(n); }
    static void reset_peak() { peak().store(current().load()); }
};

struct TensorStorage {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty unless allocated; same length as data otherwise
    bool requires_grad = false;

    TensorStorage(Shape s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
        MemTracker::add(static_cast<long long>(data.capacity() * sizeof(double)));
    }
    ~TensorStorage() {
        MemTracker::sub(static_cast<long long>((data.capacity() + grad.capacity()) * sizeof(double)));
    }
    TensorStorage(const TensorStorage&) = delete;
    TensorStorage& operator=(const TensorStorage&) = delete;

    void alloc_grad() {
        if (grad.empty()) {
            grad.assign(data.size(), 0.0);
            MemTracker::add(static_cast<long long>(grad.capacity() * sizeof(double)));
        }
    }
};

inline long long checked_numel(const Shape& shape) {
    long long n = 1;
    for (long long e : shape) {
        if (e <= 0) {
            std::ostringstream oss;
            oss << "invalid shape extent " << e << " (extents must be positive)";
            throw shape_error(oss.str());
        }
        n *= e;
    }
    return n;
}

}  // namespace detail

inline std::string shape_to_string(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

// Dense row-major f64 tensor. Handles share storage (shallow copy); data
// is treated as immutable once an op has produced it, except for optimizer
// updates on parameter tensors.
class Tensor {
  public:
    Tensor() = default;

    static Tensor zeros(Shape shape) {
        const long long n = detail::checked_numel(shape);
        return Tensor(std::make_shared<detail::TensorStorage>(
            std::move(shape), std::vector<double>(static_cast<std::size_t>(n), 0.0)));
    }

    static Tensor constant(Shape shape, double value) {
        const long long n = detail::checked_numel(shape);
        return Tensor(std::make_shared<detail::TensorStorage>(
            std::move(shape), std::vector<double>(static_cast<std::size_t>(n), value)));
    }

    static Tensor gaussian(Shape shape, std::uint64_t seed, double mean, double stddev) {
        Rng rng(seed);
        return gaussian(std::move(shape), rng, mean, stddev);
    }

    static Tensor gaussian(Shape shape, Rng& rng, double mean, double stddev) {
        if (stddev < 0.0) throw config_error("gaussian init: stddev must be >= 0");
        const long long n = detail::checked_numel(shape);
        std::vector<double> d(static_cast<std::size_t>(n));
        for (auto& x : d) x = rng.normal(mean, stddev);
        return Tensor(std::make_shared<detail::TensorStorage>(std::move(shape), std::move(d)));
    }

    static Tensor from_values(Shape shape, std::vector<double> values) {
        const long long n = detail::checked_numel(shape);
        if (static_cast<std::size_t>(n) != values.size())
            throw shape_error("from_values: element count does not match shape " + shape_to_string(shape));
        return Tensor(std::make_shared<detail::TensorStorage>(std::move(shape), std::move(values)));
    }

    bool defined() const { return static_cast<bool>(impl_); }
    const Shape& shape() const { return storage().shape; }
    long long numel() const { return static_cast<long long>(storage().data.size()); }
    bool is_scalar() const { return defined() && storage().data.size() == 1; }

    double* data() { return storage().data.data(); }
    const double* data() const { return storage().data.data(); }
    std::vector<double>& values() { return storage().data; }
    const std::vector<double>& values() const { return storage().data; }
    double item() const {
        if (!is_scalar()) throw shape_error("item(): tensor is not scalar");
        return storage().data[0];
    }

    bool requires_grad() const { return defined() && storage().requires_grad; }
    Tensor& set_requires_grad(bool v) {
        storage().requires_grad = v;
        return *this;
    }

    bool has_grad() const { return defined() && !storage().grad.empty(); }
    // Lazily allocates a zero gradient buffer; absent grad means zero.
    std::vector<double>& grad() {
        storage().alloc_grad();
        return storage().grad;
    }
    const std::vector<double>& grad_or_empty() const {
        static const std::vector<double> empty;
        return defined() ? storage().grad : empty;
    }
    void zero_grad() {
        if (has_grad()) std::fill(storage().grad.begin(), storage().grad.end(), 0.0);
    }

    // Identity of the underlying storage; two handles alias iff equal.
    const void* storage_id() const { return impl_.get(); }

    std::shared_ptr<detail::TensorStorage> impl() const { return impl_; }

  private:
    explicit Tensor(std::shared_ptr<detail::TensorStorage> impl) : impl_(std::move(impl)) {}

    detail::TensorStorage& storage() {
        if (!impl_) throw state_error("use of undefined tensor");
        return *impl_;
    }
    const detail::TensorStorage& storage() const {
        if (!impl_) throw state_error("use of undefined tensor");
        return *impl_;
    }

    std::shared_ptr<detail::TensorStorage> impl_;
};

inline bool same_shape(const Tensor& a, const Tensor& b) { return a.shape() == b.shape(); }

inline long long live_tensor_bytes() { return detail::MemTracker::current().load(); }
inline long long peak_tensor_bytes() { return detail::MemTracker::peak().load(); }
inline void reset_peak_tensor_bytes() { detail::MemTracker::reset_peak(); }

}  // namespace chanpred
