#pragma once

#include <stdexcept>
#include <string>

namespace gatlab {

// Shape disagreement between operands. Message names both shapes.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A node whose output is consumed has no in-neighbors, or a softmax
// segment is empty.
struct DegenerateNeighborhoodError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Not enough non-edges left to sample the requested amount of noise.
struct CapacityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Rank-deficient input where full rank is required. Message names the
// smallest singular value.
struct SingularityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// NaN/Inf encountered, or an iterative routine failed to converge.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// API misuse: wrong layer kind, non-scalar objective, bad argument.
struct ContractError : std::logic_error {
    using std::logic_error::logic_error;
};

// Malformed or inconsistent file contents.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace gatlab
