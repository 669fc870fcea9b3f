#pragma once

#include <stdexcept>
#include <string>

namespace aurl {

// Input text could not be parsed (bad line, bad config key, ...).
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A binary artifact has the wrong magic/version.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A binary artifact is internally inconsistent (truncated payload, bad sizes).
class CorruptionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Matrix/vector dimensions do not line up.
class ShapeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// All pairwise distances collapse; median-heuristic bandwidth is undefined.
class DegenerateBandwidthError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Fewer than two points on one side of a pairwise-potential term.
class InsufficientPairsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A sampled group subset came back empty.
class SamplingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Training hit a non-recoverable state (non-finite loss or gradient).
class TrainingAbort : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A metric has no evaluable users / degenerate inputs.
class MetricUndefinedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace aurl
