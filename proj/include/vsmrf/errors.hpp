#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace vsmrf {

/// A node value lies outside its family's domain.
class DomainError : public std::invalid_argument {
   public:
    using std::invalid_argument::invalid_argument;
};

/// A natural-parameter vector violates its family's constraints.
class ConstraintViolation : public std::domain_error {
   public:
    enum class Kind { lower, upper, equality, non_finite };

    ConstraintViolation(Kind kind, std::size_t coordinate, double bound, double value,
                        std::optional<std::size_t> sample = std::nullopt);

    Kind kind() const noexcept { return kind_; }
    std::size_t coordinate() const noexcept { return coordinate_; }
    double bound() const noexcept { return bound_; }
    double value() const noexcept { return value_; }
    /// Index of the training sample or Gibbs step that produced the parameter, if known.
    std::optional<std::size_t> sample() const noexcept { return sample_; }

    ConstraintViolation at_sample(std::size_t i) const;

   private:
    Kind kind_;
    std::size_t coordinate_;
    double bound_;
    double value_;
    std::optional<std::size_t> sample_;
};

/// Malformed input file; line and column are 1-based, 0 when unknown.
class ParseError : public std::runtime_error {
   public:
    ParseError(const std::string& what, std::size_t line = 0, std::size_t column = 0);
    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }
    /// The message without the position prefix.
    const std::string& message() const noexcept { return message_; }

   private:
    std::string message_;
    std::size_t line_;
    std::size_t column_;
};

/// A model, dataset or fit collection failed a consistency check.
class ValidationError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

}  // namespace vsmrf
