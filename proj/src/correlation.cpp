#include "fourtran/correlation.hpp"

#include "fourtran/parallel.hpp"

#include <fftw3.h>

#include <complex>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace fourtran {

KernelView kernel_view(const FourierField& k) {
    return {k.grid, k.groups, static_cast<int>(k.fiber.size()), k.data};
}

KernelView kernel_view(const ScalarField& k) { return {k.grid, k.channels, 1, k.data}; }

namespace {

void check(const ScalarField& f, const KernelView& k) {
    if (f.grid.dim != k.grid.dim) throw std::invalid_argument("correlate: dimension mismatch");
    if (f.channels != k.in_channels) throw std::invalid_argument("correlate: channel count mismatch");
    for (int a = 0; a < k.grid.dim; ++a)
        if (k.grid.shape[a] % 2 == 0) throw std::invalid_argument("correlate: kernel extents must be odd");
    if (k.data.size() != k.grid.cells() * static_cast<std::size_t>(k.in_channels * k.out_channels))
        throw std::invalid_argument("correlate: kernel data size mismatch");
}

}  // namespace

int fft_friendly_size(int n) {
    for (int m = std::max(1, n);; ++m) {
        int r = m;
        for (int p : {2, 3, 5, 7})
            while (r % p == 0) r /= p;
        if (r == 1) return m;
    }
}

std::vector<double> correlate_at(const ScalarField& f, const KernelView& k, const Cell& v) {
    check(f, k);
    const auto in = static_cast<std::size_t>(k.in_channels);
    const auto out_ch = static_cast<std::size_t>(k.out_channels);
    std::vector<double> out(out_ch, 0.0);
    const std::array<int, 3> h{k.grid.shape[0] / 2, k.grid.shape[1] / 2, k.grid.shape[2] / 2};
    for (std::size_t kc = 0; kc < k.grid.cells(); ++kc) {
        const Cell w = k.grid.unflatten(kc);
        const Cell u{v[0] + w[0] - h[0], v[1] + w[1] - h[1], v[2] + w[2] - h[2]};
        if (!f.grid.contains(u)) continue;
        const std::size_t fu = f.grid.flat(u) * in;
        for (std::size_t c = 0; c < in; ++c) {
            const double fv = f.data[fu + c];
            if (fv == 0.0) continue;
            const double* kw = k.data.data() + (kc * in + c) * out_ch;
            for (std::size_t j = 0; j < out_ch; ++j) out[j] += fv * kw[j];
        }
    }
    return out;
}

std::vector<double> correlate_direct(const ScalarField& f, const KernelView& k) {
    check(f, k);
    const auto in = static_cast<std::size_t>(k.in_channels);
    const auto out_ch = static_cast<std::size_t>(k.out_channels);
    std::vector<double> out(f.grid.cells() * out_ch, 0.0);
    const auto& s = f.grid.shape;
    const auto& ks = k.grid.shape;
    const std::array<int, 3> h{ks[0] / 2, ks[1] / 2, ks[2] / 2};
    parallel_for(static_cast<std::size_t>(s[0]), [&](std::size_t i0) {
        std::vector<double> acc(out_ch);
        for (int i1 = 0; i1 < s[1]; ++i1) {
            for (int i2 = 0; i2 < s[2]; ++i2) {
                std::fill(acc.begin(), acc.end(), 0.0);
                for (int w0 = 0; w0 < ks[0]; ++w0) {
                    const int u0 = static_cast<int>(i0) + w0 - h[0];
                    if (u0 < 0 || u0 >= s[0]) continue;
                    for (int w1 = 0; w1 < ks[1]; ++w1) {
                        const int u1 = i1 + w1 - h[1];
                        if (u1 < 0 || u1 >= s[1]) continue;
                        // Innermost axis is contiguous in both arrays.
                        const int w2_lo = std::max(0, h[2] - i2);
                        const int w2_hi = std::min(ks[2], s[2] - i2 + h[2]);
                        const std::size_t f_row = f.grid.flat({u0, u1, 0});
                        const std::size_t k_row = k.grid.flat({w0, w1, 0});
                        for (int w2 = w2_lo; w2 < w2_hi; ++w2) {
                            const std::size_t fu = (f_row + static_cast<std::size_t>(i2 + w2 - h[2])) * in;
                            const std::size_t kw = (k_row + static_cast<std::size_t>(w2)) * in;
                            for (std::size_t c = 0; c < in; ++c) {
                                const double fv = f.data[fu + c];
                                const double* kp = k.data.data() + (kw + c) * out_ch;
                                for (std::size_t j = 0; j < out_ch; ++j) acc[j] += fv * kp[j];
                            }
                        }
                    }
                }
                const std::size_t dst = f.grid.flat({static_cast<int>(i0), i1, i2}) * out_ch;
                for (std::size_t j = 0; j < out_ch; ++j) out[dst + j] = acc[j];
            }
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// FFT path

namespace {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};
template <class T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <class T>
FftwBuffer<T> fftw_buffer(std::size_t n) {
    auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * std::max<std::size_t>(n, 1)));
    if (!p) throw std::bad_alloc();
    return FftwBuffer<T>(p);
}

struct PlanPair {
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
    PlanPair() = default;
    PlanPair(const PlanPair&) = delete;
    PlanPair& operator=(const PlanPair&) = delete;
    ~PlanPair() {
        std::lock_guard lock(planner_mutex());
        if (forward) fftw_destroy_plan(forward);
        if (backward) fftw_destroy_plan(backward);
    }
};

}  // namespace

std::vector<double> correlate_fft(const ScalarField& f, const KernelView& k) {
    check(f, k);
    const int dim = f.grid.dim;
    const auto in = static_cast<std::size_t>(k.in_channels);
    const auto out_ch = static_cast<std::size_t>(k.out_channels);
    const auto& s = f.grid.shape;
    const auto& ks = k.grid.shape;
    const std::array<int, 3> h{ks[0] / 2, ks[1] / 2, ks[2] / 2};

    std::array<int, 3> p{1, 1, 1};
    for (int a = 0; a < dim; ++a) p[a] = fft_friendly_size(s[a] + h[a]);
    const std::size_t real_n = static_cast<std::size_t>(p[0]) * p[1] * p[2];
    const int last = p[dim - 1];
    const std::size_t cplx_n = real_n / static_cast<std::size_t>(last) * static_cast<std::size_t>(last / 2 + 1);
    const double scale = 1.0 / static_cast<double>(real_n);
    auto flat_p = [&](int a, int b, int c) {
        return (static_cast<std::size_t>(a) * p[1] + static_cast<std::size_t>(b)) * p[2] + static_cast<std::size_t>(c);
    };

    PlanPair plans;
    {
        auto r = fftw_buffer<double>(real_n);
        auto c = fftw_buffer<fftw_complex>(cplx_n);
        std::lock_guard lock(planner_mutex());
        plans.forward = fftw_plan_dft_r2c(dim, p.data(), r.get(), c.get(), FFTW_ESTIMATE);
        plans.backward = fftw_plan_dft_c2r(dim, p.data(), c.get(), r.get(), FFTW_ESTIMATE);
    }
    if (!plans.forward || !plans.backward) throw std::runtime_error("correlate_fft: FFTW planning failed");

    // Spectra of the input channels.
    std::vector<FftwBuffer<fftw_complex>> f_hat;
    for (std::size_t c = 0; c < in; ++c) f_hat.push_back(fftw_buffer<fftw_complex>(cplx_n));
    parallel_for(in, [&](std::size_t c) {
        auto r = fftw_buffer<double>(real_n);
        std::fill(r.get(), r.get() + real_n, 0.0);
        for (std::size_t cell = 0; cell < f.grid.cells(); ++cell) {
            const Cell q = f.grid.unflatten(cell);
            r[flat_p(q[0], q[1], q[2])] = f.data[cell * in + c];
        }
        fftw_execute_dft_r2c(plans.forward, r.get(), f_hat[c].get());
    });

    std::vector<double> out(f.grid.cells() * out_ch, 0.0);
    parallel_for(out_ch, [&](std::size_t j) {
        auto r = fftw_buffer<double>(real_n);
        auto k_hat = fftw_buffer<fftw_complex>(cplx_n);
        auto acc = fftw_buffer<fftw_complex>(cplx_n);
        std::fill(&acc[0][0], &acc[0][0] + 2 * cplx_n, 0.0);
        for (std::size_t c = 0; c < in; ++c) {
            std::fill(r.get(), r.get() + real_n, 0.0);
            for (std::size_t kc = 0; kc < k.grid.cells(); ++kc) {
                const Cell w = k.grid.unflatten(kc);
                std::array<int, 3> idx{};
                for (int a = 0; a < 3; ++a) {
                    const int off = w[a] - h[a];
                    idx[a] = off < 0 ? off + p[a] : off;
                }
                r[flat_p(idx[0], idx[1], idx[2])] = k.data[(kc * in + c) * out_ch + j];
            }
            fftw_execute_dft_r2c(plans.forward, r.get(), k_hat.get());
            const fftw_complex* fh = f_hat[c].get();
            for (std::size_t i = 0; i < cplx_n; ++i) {
                // F * conj(K)
                acc[i][0] += fh[i][0] * k_hat[i][0] + fh[i][1] * k_hat[i][1];
                acc[i][1] += fh[i][1] * k_hat[i][0] - fh[i][0] * k_hat[i][1];
            }
        }
        fftw_execute_dft_c2r(plans.backward, acc.get(), r.get());
        for (std::size_t cell = 0; cell < f.grid.cells(); ++cell) {
            const Cell q = f.grid.unflatten(cell);
            out[cell * out_ch + j] = r[flat_p(q[0], q[1], q[2])] * scale;
        }
    });
    (void)s;
    return out;
}

}  // namespace fourtran
