#pragma once

#include <stdexcept>
#include <string>

namespace archtx {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad key, bad value, or malformed run configuration file.
struct ConfigError : Error {
    using Error::Error;
};

// Tensor/graph shape violation (mismatched sum, illegal identity, ...).
struct ShapeError : Error {
    using Error::Error;
};

// Decision set is inconsistent with the network it is applied to.
struct DecisionError : Error {
    using Error::Error;
};

// Non-finite loss during training.
struct DivergedError : Error {
    using Error::Error;
};

// Discretization left the output unreachable and the policy is `reject`.
struct DisconnectedError : Error {
    using Error::Error;
};

// Unreadable, corrupted, or version-incompatible checkpoint.
struct CheckpointError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace archtx
