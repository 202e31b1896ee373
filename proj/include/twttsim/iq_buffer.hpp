#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

namespace twtt {

using cplx = std::complex<double>;

// Equivalent complex baseband sample buffer. Generated waveforms keep
// |sample| <= 1; received buffers may exceed that once noise is added.
struct IqBuffer {
    std::vector<cplx> samples;
    double sample_rate = 0.0;  // Hz

    IqBuffer() = default;
    IqBuffer(std::vector<cplx> s, double fs) : samples(std::move(s)), sample_rate(fs) {}

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
    double duration_s() const { return sample_rate > 0 ? samples.size() / sample_rate : 0.0; }
};

// Binary interchange: interleaved little-endian float32 I/Q pairs.
void save_iq_f32(const IqBuffer& buf, const std::string& path);
IqBuffer load_iq_f32(const std::string& path, double sample_rate);

// Text interchange: whitespace-separated columns "t re im" with a header row,
// one sample per line.
void save_dat(const IqBuffer& buf, const std::string& path);
IqBuffer load_dat(const std::string& path);

}  // namespace twtt
