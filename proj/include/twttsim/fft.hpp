#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace twtt {

std::size_t next_pow2(std::size_t n);

// In-place complex FFT, power-of-two sizes only. Inverse includes the 1/N
// normalization.
void fft_in_place(std::vector<std::complex<double>>& data, bool inverse);

}  // namespace twtt
