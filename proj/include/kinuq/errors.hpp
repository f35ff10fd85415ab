#pragma once

#include <stdexcept>
#include <string>

namespace kinuq {

// Base class for all errors raised by the library. Solver-side failures
// (non-physical states, blowups) derive from SolverError so a driver can map
// them to a single "solver failure" exit path; configuration and data-layout
// problems derive from std::invalid_argument via ConfigError/DataError.
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonPositiveDensity : SolverError {
    using SolverError::SolverError;
};

struct NonPositiveTemperature : SolverError {
    using SolverError::SolverError;
};

struct StateBlowup : SolverError {
    using SolverError::SolverError;
};

struct InvalidState : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Velocity lattice too large for the direct O(Nv^4) collision oracle.
struct GridTooLarge : InvalidState {
    using InvalidState::InvalidState;
};

// Kernel exponent outside the shipped coverage (Maxwell molecules, lambda=0).
struct UnsupportedExponent : InvalidState {
    using InvalidState::InvalidState;
};

// Two objects built on different grids/lattices were combined.
struct GridMismatch : InvalidState {
    using InvalidState::InvalidState;
};

// Snapshot blocks laid out inconsistently (wrong length or block order).
struct BlockLayoutMismatch : InvalidState {
    using InvalidState::InvalidState;
};

// Greedy budget demanded more points than the snapshot set's numerical rank.
struct BudgetExceedsRank : InvalidState {
    using InvalidState::InvalidState;
};

// Sample ids disagree between two collections that must be aligned.
struct IdMismatch : InvalidState {
    using InvalidState::InvalidState;
};

// Sample file/test-set mismatch at the harness level.
struct SampleMismatch : InvalidState {
    using InvalidState::InvalidState;
};

// Malformed configuration input (bad JSON, missing keys, bad values).
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

}  // namespace kinuq
