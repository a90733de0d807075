#pragma once

#include <stdexcept>
#include <string>

namespace critmem {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid configuration: bad label spaces, missing artifacts, out-of-range
// fractions, strategy prerequisites not met.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Transport-level failure talking to a backend, after retries.
class TransportError : public Error {
public:
    using Error::Error;
};

// Backend answered but the payload is not what the protocol promises.
class ProtocolError : public Error {
public:
    using Error::Error;
};

// Scripted backend had no matching rule and no default.
class ScriptError : public Error {
public:
    using Error::Error;
};

// Embedding provider returned unusable vectors.
class EmbeddingError : public Error {
public:
    using Error::Error;
};

// Vector index misuse: dimension mismatch, unfrozen queries, id clashes.
class IndexError : public Error {
public:
    using Error::Error;
};

// Stored state disagrees with itself (store/index id mismatch, artifact
// overwrite with different bytes).
class IntegrityError : public Error {
public:
    using Error::Error;
};

// Report assembly could not find a required cell.
class AggregationError : public Error {
public:
    using Error::Error;
};

} // namespace critmem
