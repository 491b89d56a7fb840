#ifndef CSB_RNG_HPP
#define CSB_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace csb {

// All randomness flows through this wrapper. std::mt19937_64 has a portable
// bit stream, but the std distributions do not, so the draws below are
// implemented by hand to keep results identical across standard libraries.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t raw() { return eng_(); }

    // Uniform on the open interval (0,1): u = (k+1) * 2^-32 with k drawn
    // uniformly from [0, 2^32-2]. Every value keeps a margin of at least
    // 2^-32 from both endpoints, so dividing a stratum [j/N,(j+1)/N) as
    // (j+u)/N can never round onto a boundary for any practical N.
    double uniform01() {
        for (;;) {
            const auto k = static_cast<std::uint32_t>(eng_() >> 32);
            if (k == 0xFFFFFFFFu) continue;
            return (static_cast<double>(k) + 1.0) * 0x1p-32;
        }
    }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    // Unbiased integer in [0, n) by rejection.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        for (;;) {
            const std::uint64_t v = eng_();
            if (v < limit) return v % n;
        }
    }

    // Fisher-Yates, explicit so the permutation stream is portable.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Standard normal via Box-Muller (one value per call, pair cached).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

  private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// FNV-1a over a byte string; used to derive named sub-stream seeds from one
// root seed so independent stages never share a generator state.
inline std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ull) {
    return fnv1a(s.data(), s.size(), h);
}

inline std::uint64_t substream_seed(std::uint64_t root_seed, const std::string& name) {
    std::uint64_t h = fnv1a(name);
    h = fnv1a(&root_seed, sizeof root_seed, h);
    return h;
}

inline RngStream substream(std::uint64_t root_seed, const std::string& name) {
    return RngStream(substream_seed(root_seed, name));
}

}  // namespace csb

#endif
