#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace frekoo {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Contract violations on inputs (shapes, finiteness, dataset contents).
struct InvalidInputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Bad hyperparameters or malformed/missing config entries.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// CSV ingestion failures; carries row context in the message.
struct IngestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised when the total loss becomes non-finite or exceeds the guard.
struct TrainingDivergedError : std::runtime_error {
    int epoch;
    TrainingDivergedError(int epoch_, const std::string& msg)
        : std::runtime_error(msg), epoch(epoch_) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw InvalidInputError(msg);
}

inline bool all_finite(const Eigen::Ref<const Matrix>& m) {
    return m.allFinite();
}

// Deterministic across runs on a given platform; every randomized routine
// takes an explicit seed or generator.
using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

// Splitmix-style derivation so independent components seeded from one run
// seed do not share streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// FNV-1a, used for config hashes embedded in checkpoints.
inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace frekoo
