#pragma once

#include <cstdint>
#include <vector>

#include "smcnn/errors.hpp"

namespace smcnn {

/// Dense (time, channel, feature) array in time-major order:
/// flat index = (t * channels + c) * features + f.
template <typename S>
struct Tensor3 {
    int t = 0;
    int c = 0;
    int f = 0;
    std::vector<S> data;

    Tensor3() = default;
    Tensor3(int t_, int c_, int f_)
        : t(t_), c(c_), f(f_), data(std::size_t(t_) * c_ * f_, S(0)) {}

    std::int64_t size() const { return std::int64_t(t) * c * f; }

    S& at(int ti, int ci, int fi) { return data[(std::size_t(ti) * c + ci) * f + fi]; }
    const S& at(int ti, int ci, int fi) const {
        return data[(std::size_t(ti) * c + ci) * f + fi];
    }

    S* row(int ti, int ci) { return data.data() + (std::size_t(ti) * c + ci) * f; }
    const S* row(int ti, int ci) const { return data.data() + (std::size_t(ti) * c + ci) * f; }

    bool same_shape(const Tensor3& o) const { return t == o.t && c == o.c && f == o.f; }

    void fill(S value) { data.assign(data.size(), value); }

    /// Resizes to the given shape if needed; contents unspecified afterwards.
    void reshape(int t_, int c_, int f_) {
        t = t_;
        c = c_;
        f = f_;
        data.resize(std::size_t(t_) * c_ * f_);
    }
};

using Tensor3f = Tensor3<float>;
using Tensor3d = Tensor3<double>;

template <typename To, typename From>
Tensor3<To> tensor_cast(const Tensor3<From>& in) {
    Tensor3<To> out(in.t, in.c, in.f);
    for (std::size_t i = 0; i < in.data.size(); ++i) out.data[i] = To(in.data[i]);
    return out;
}

}  // namespace smcnn
