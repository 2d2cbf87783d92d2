#ifndef KSEG_RANDOM_HPP
#define KSEG_RANDOM_HPP

#include <cstdint>
#include <random>
#include <span>

namespace kseg {

/// The single random source threaded through every sampling routine.
using Rng = std::mt19937_64;

/// Draws an index with probability proportional to exp(log_weights[i]).
/// Throws InvalidInput when every weight is -inf.
int sample_log_weights(std::span<const double> log_weights, Rng& rng);

/// Draws from a normalized (or unnormalized, non-negative) weight vector.
int sample_weights(std::span<const double> weights, Rng& rng);

} // namespace kseg

#endif
