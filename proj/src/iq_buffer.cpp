#include "twttsim/iq_buffer.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace twtt {

namespace {

// Shortest representation that round-trips exactly.
std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    if (res.ec != std::errc{}) throw std::runtime_error("format_double failed");
    return std::string(buf, res.ptr);
}

}  // namespace

void save_iq_f32(const IqBuffer& buf, const std::string& path) {
    static_assert(std::endian::native == std::endian::little,
                  "f32 interchange assumes a little-endian host");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_iq_f32: cannot open " + path);
    std::vector<float> interleaved(buf.size() * 2);
    for (std::size_t i = 0; i < buf.size(); ++i) {
        interleaved[2 * i] = static_cast<float>(buf.samples[i].real());
        interleaved[2 * i + 1] = static_cast<float>(buf.samples[i].imag());
    }
    out.write(reinterpret_cast<const char*>(interleaved.data()),
              static_cast<std::streamsize>(interleaved.size() * sizeof(float)));
    if (!out) throw std::runtime_error("save_iq_f32: write failed for " + path);
}

IqBuffer load_iq_f32(const std::string& path, double sample_rate) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw std::runtime_error("load_iq_f32: cannot open " + path);
    const auto bytes = static_cast<std::size_t>(in.tellg());
    if (bytes % (2 * sizeof(float)) != 0)
        throw std::runtime_error("load_iq_f32: truncated I/Q file " + path);
    in.seekg(0);
    std::vector<float> interleaved(bytes / sizeof(float));
    in.read(reinterpret_cast<char*>(interleaved.data()), static_cast<std::streamsize>(bytes));
    if (!in) throw std::runtime_error("load_iq_f32: read failed for " + path);
    IqBuffer buf;
    buf.sample_rate = sample_rate;
    buf.samples.resize(interleaved.size() / 2);
    for (std::size_t i = 0; i < buf.samples.size(); ++i)
        buf.samples[i] = {interleaved[2 * i], interleaved[2 * i + 1]};
    return buf;
}

void save_dat(const IqBuffer& buf, const std::string& path) {
    if (buf.sample_rate <= 0) throw std::invalid_argument("save_dat: sample_rate must be set");
    std::ofstream out(path, std::ios::binary);  // binary keeps LF endings everywhere
    if (!out) throw std::runtime_error("save_dat: cannot open " + path);
    out << "t re im\n";
    for (std::size_t i = 0; i < buf.size(); ++i) {
        out << format_double(static_cast<double>(i) / buf.sample_rate) << ' '
            << format_double(buf.samples[i].real()) << ' '
            << format_double(buf.samples[i].imag()) << '\n';
    }
    if (!out) throw std::runtime_error("save_dat: write failed for " + path);
}

IqBuffer load_dat(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_dat: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_dat: empty file " + path);
    IqBuffer buf;
    std::vector<double> times;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        double t, re, im;
        if (!(row >> t >> re >> im))
            throw std::runtime_error("load_dat: malformed row in " + path);
        times.push_back(t);
        buf.samples.emplace_back(re, im);
    }
    if (times.size() < 2)
        throw std::runtime_error("load_dat: need at least two samples to infer the rate");
    buf.sample_rate = 1.0 / (times[1] - times[0]);
    return buf;
}

}  // namespace twtt
