#include "twttsim/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <stdexcept>
#include <unordered_map>

namespace twtt {

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

namespace {

// FFTW plan creation is not thread-safe; execution through execute_dft is.
// Plans are created alignment-agnostic so they can run on any buffer.
class PlanCache {
public:
    fftw_plan get(std::size_t n, bool inverse) {
        std::scoped_lock lock(mutex_);
        auto key = (static_cast<std::uint64_t>(n) << 1) | (inverse ? 1u : 0u);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::vector<std::complex<double>> scratch(n);
        auto* ptr = reinterpret_cast<fftw_complex*>(scratch.data());
        fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), ptr, ptr,
                                          inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                                          FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!plan) throw std::runtime_error("fftw_plan_dft_1d failed");
        plans_.emplace(key, plan);
        return plan;
    }

private:
    std::mutex mutex_;
    std::unordered_map<std::uint64_t, fftw_plan> plans_;
};

PlanCache& plan_cache() {
    static PlanCache cache;
    return cache;
}

}  // namespace

void fft_in_place(std::vector<std::complex<double>>& data, bool inverse) {
    const std::size_t n = data.size();
    if (n == 0) throw std::invalid_argument("fft_in_place: empty input");
    if ((n & (n - 1)) != 0) throw std::invalid_argument("fft_in_place: size must be a power of two");
    fftw_plan plan = plan_cache().get(n, inverse);
    auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan, ptr, ptr);
    if (inverse) {
        const double scale = 1.0 / static_cast<double>(n);
        for (auto& v : data) v *= scale;
    }
}

}  // namespace twtt
