#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace softrank {

inline constexpr const char* kVersion = "0.1.0";

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Rows are samples, columns are coordinates.
using DataMatrix = Matrix;

using Rng = std::mt19937_64;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

class UnsupportedDimension : public Error {
public:
    using Error::Error;
};

class InsufficientSamples : public Error {
public:
    using Error::Error;
};

class DegeneratePlan : public Error {
public:
    using Error::Error;
};

class SingularCovariance : public Error {
public:
    using Error::Error;
};

// Non-finite value inside a numeric pipeline; the message names the stage.
class NumericOverflow : public Error {
public:
    using Error::Error;
};

inline std::string shape_string(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

/// splitmix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed for sub-stream `index` of a run seeded with `seed`. Independent of
/// evaluation order, so parallel repetitions reproduce serial ones.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return mix64(mix64(seed) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

inline Matrix standard_normal(Index rows, Index cols, Rng& rng) {
    Matrix out(rows, cols);
    // Row-major fill; a fresh distribution per row drops any cached pair
    // value, so drawing rows one at a time consumes the stream identically.
    for (Index i = 0; i < rows; ++i) {
        std::normal_distribution<double> normal(0.0, 1.0);
        for (Index j = 0; j < cols; ++j) out(i, j) = normal(rng);
    }
    return out;
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline void require_finite(const Matrix& m, const char* stage) {
    if (!m.allFinite()) throw NumericOverflow(std::string("non-finite value in ") + stage);
}

inline void require_finite(double v, const char* stage) {
    if (!std::isfinite(v)) throw NumericOverflow(std::string("non-finite value in ") + stage);
}

/// Runs fn and prefixes the message of any library error with `context`,
/// keeping the error type.
template <class Fn>
decltype(auto) with_context(const std::string& context, Fn&& fn) {
    const auto wrap = [&](const std::exception& e) { return context + ": " + e.what(); };
    try {
        return fn();
    } catch (const NumericOverflow& e) {
        throw NumericOverflow(wrap(e));
    } catch (const DimensionError& e) {
        throw DimensionError(wrap(e));
    } catch (const InvalidInput& e) {
        throw InvalidInput(wrap(e));
    } catch (const UnsupportedDimension& e) {
        throw UnsupportedDimension(wrap(e));
    } catch (const InsufficientSamples& e) {
        throw InsufficientSamples(wrap(e));
    } catch (const DegeneratePlan& e) {
        throw DegeneratePlan(wrap(e));
    } catch (const SingularCovariance& e) {
        throw SingularCovariance(wrap(e));
    }
}

}  // namespace softrank
