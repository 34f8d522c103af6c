#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>

namespace rxnc::io {

/// Little-endian writer over an output file; throws std::runtime_error on failure.
class Writer {
public:
    explicit Writer(const std::string& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
        if (!out_) throw std::runtime_error("cannot open '" + path + "' for writing");
    }

    void bytes(const void* p, std::size_t n) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
        if (!out_) throw std::runtime_error("write failed on '" + path_ + "'");
    }
    void magic(std::string_view m) { bytes(m.data(), m.size()); }

    template <class T>
    void put(T v) {
        static_assert(std::is_arithmetic_v<T>);
        if constexpr (std::is_floating_point_v<T>) {
            using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
            put(std::bit_cast<U>(v));
        } else {
            unsigned char buf[sizeof(T)];
            auto u = static_cast<std::make_unsigned_t<T>>(v);
            for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(u >> (8 * i));
            bytes(buf, sizeof(T));
        }
    }
    void string(std::string_view s) {
        put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }
    void close() {
        out_.close();
        if (!out_) throw std::runtime_error("close failed on '" + path_ + "'");
    }

private:
    std::string path_;
    std::ofstream out_;
};

class Reader {
public:
    explicit Reader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) throw std::runtime_error("cannot open '" + path + "'");
    }

    void bytes(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) {
            throw std::runtime_error("'" + path_ + "': truncated file");
        }
    }
    void expect_magic(std::string_view m) {
        std::string got(m.size(), '\0');
        bytes(got.data(), got.size());
        if (got != m) throw std::runtime_error("'" + path_ + "': bad magic, expected '" + std::string(m) + "'");
    }

    template <class T>
    T get() {
        static_assert(std::is_arithmetic_v<T>);
        if constexpr (std::is_floating_point_v<T>) {
            using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
            return std::bit_cast<T>(get<U>());
        } else {
            unsigned char buf[sizeof(T)];
            bytes(buf, sizeof(T));
            std::make_unsigned_t<T> u = 0;
            for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<std::make_unsigned_t<T>>(buf[i]) << (8 * i);
            return static_cast<T>(u);
        }
    }
    std::string string(std::size_t max_len = 1u << 24) {
        const auto n = get<std::uint32_t>();
        if (n > max_len) throw std::runtime_error("'" + path_ + "': string field too long");
        std::string s(n, '\0');
        bytes(s.data(), n);
        return s;
    }
    bool at_eof() { return in_.peek() == std::char_traits<char>::eof(); }
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ifstream in_;
};

}  // namespace rxnc::io
