#pragma once

// Little helpers for the native-endian binary checkpoint formats.

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace vibret::io {

template <typename T>
void put(std::ostream& out, const T& value) {
    static_assert(std::is_trivially_copyable_v<T>);
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    static_assert(std::is_trivially_copyable_v<T>);
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw std::runtime_error("truncated binary stream");
    return value;
}

inline void put_magic(std::ostream& out, const std::string& magic) { out.write(magic.data(), static_cast<std::streamsize>(magic.size())); }

inline void expect_magic(std::istream& in, const std::string& magic) {
    std::string got(magic.size(), '\0');
    in.read(got.data(), static_cast<std::streamsize>(got.size()));
    if (!in || got != magic) throw std::runtime_error("not a " + magic + " file");
}

template <typename Derived>
void put_matrix(std::ostream& out, const Eigen::MatrixBase<Derived>& m) {
    put<std::int64_t>(out, m.rows());
    put<std::int64_t>(out, m.cols());
    using Scalar = typename Derived::Scalar;
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) put<Scalar>(out, m(i, j));
}

template <typename Matrix>
Matrix get_matrix(std::istream& in) {
    const auto rows = get<std::int64_t>(in);
    const auto cols = get<std::int64_t>(in);
    if (rows < 0 || cols < 0 || rows * cols > (std::int64_t{1} << 32)) throw std::runtime_error("bad matrix shape in stream");
    Matrix m(rows, cols);
    using Scalar = typename Matrix::Scalar;
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = get<Scalar>(in);
    return m;
}

template <typename T>
void put_vector(std::ostream& out, const std::vector<T>& v) {
    put<std::uint64_t>(out, v.size());
    for (const T& x : v) put<T>(out, x);
}

template <typename T>
std::vector<T> get_vector(std::istream& in) {
    const auto n = get<std::uint64_t>(in);
    if (n > (std::uint64_t{1} << 34)) throw std::runtime_error("bad vector length in stream");
    std::vector<T> v(n);
    for (auto& x : v) x = get<T>(in);
    return v;
}

inline void put_string(std::ostream& out, const std::string& s) {
    put<std::uint64_t>(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& in) {
    const auto n = get<std::uint64_t>(in);
    if (n > (1u << 24)) throw std::runtime_error("bad string length in stream");
    std::string s(n, '\0');
    in.read(s.data(), static_cast<std::streamsize>(n));
    if (!in) throw std::runtime_error("truncated binary stream");
    return s;
}

}  // namespace vibret::io
