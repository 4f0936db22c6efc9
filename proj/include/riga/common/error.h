#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace riga {

/// Base of every error the library throws. `exit_code()` follows the CLI
/// contract: 1 = usage/input, 2 = parse, 3 = numeric.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
    virtual int exit_code() const { return 1; }
};

class ParseError : public Error {
public:
    using Error::Error;
    int exit_code() const override { return 2; }
};

class ChainNotFound : public ParseError {
public:
    using ParseError::ParseError;
};

class EmptyBackbone : public ParseError {
public:
    using ParseError::ParseError;
};

class InvalidParameter : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
    int exit_code() const override { return 3; }
};

class InvalidRotation : public NumericError {
public:
    using NumericError::NumericError;
};

class DegenerateFrame : public NumericError {
public:
    DegenerateFrame(const std::string& what, std::size_t residue)
        : NumericError(what), residue_(residue) {}
    std::size_t residue() const { return residue_; }

private:
    std::size_t residue_;
};

class GraphTooSmall : public NumericError {
public:
    using NumericError::NumericError;
};

class ShapeError : public NumericError {
public:
    using NumericError::NumericError;
};

class InvalidBackward : public NumericError {
public:
    using NumericError::NumericError;
};

class IsolatedNode : public NumericError {
public:
    using NumericError::NumericError;
};

class EmptyLoss : public NumericError {
public:
    using NumericError::NumericError;
};

class TrainingDiverged : public NumericError {
public:
    TrainingDiverged(const std::string& what, long step) : NumericError(what), step_(step) {}
    long step() const { return step_; }

private:
    long step_;
};

class InvalidAttention : public NumericError {
public:
    using NumericError::NumericError;
};

class InfiniteResistance : public NumericError {
public:
    using NumericError::NumericError;
};

}  // namespace riga
