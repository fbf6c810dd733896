#pragma once

#include "fourtran/fields.hpp"

#include <span>
#include <vector>

namespace fourtran {

/// Odd-shaped kernel whose cells hold an in_channels x out_channels matrix
/// (row-major, input channel slowest).
struct KernelView {
    Grid grid;
    int in_channels = 1;
    int out_channels = 1;
    std::span<const double> data;
};

KernelView kernel_view(const FourierField& k);
KernelView kernel_view(const ScalarField& k);

/// out[v][j] = sum_c sum_w f[v + w][c] K[w][c][j] with w relative to the
/// kernel center, zero padding and same-size output. Direct summation.
std::vector<double> correlate_direct(const ScalarField& f, const KernelView& k);

/// Same result through zero-padded FFTs (FFTW). Output channels are computed
/// by independent tasks, so results do not depend on the thread count.
std::vector<double> correlate_fft(const ScalarField& f, const KernelView& k);

/// Correlation evaluated at one cell only.
std::vector<double> correlate_at(const ScalarField& f, const KernelView& k, const Cell& v);

/// Smallest n' >= n whose prime factors are in {2, 3, 5, 7}.
int fft_friendly_size(int n);

}  // namespace fourtran
