#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rcdet {

/// Base class for every error raised by the library. The CLI prints `what()`
/// after a stable "error: " prefix.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::uint64_t fnv1a64(std::string_view bytes);

// splitmix64 finalizer, used to derive independent streams from one seed.
std::uint64_t mix64(std::uint64_t x);

/// Deterministic PRNG wrapper. The standard distributions are
/// implementation-defined, so sampling is done by hand to keep results
/// identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next();
    // Uniform in [0, 1).
    double uniform();
    double uniform(double lo, double hi);
    // Uniform integer in [0, n), n > 0, without modulo bias.
    std::uint64_t below(std::uint64_t n);

    template <typename T>
    void shuffle(std::vector<T>& v)
    {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

private:
    std::uint64_t state_[4];
};

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

// Little-endian f32 blobs, the on-disk representation of every matrix.
std::string encode_f32(std::span<const float> values);
std::vector<float> decode_f32(std::string_view text);

/// Splits file text into lines. A trailing newline terminates the last line
/// rather than starting an empty one; "\r\n" is left for rtrim to handle.
std::vector<std::string> split_lines(std::string_view text);

std::string_view rtrim(std::string_view s);
std::string_view trim(std::string_view s);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

} // namespace rcdet
