#include "vsmrf/errors.hpp"

#include "vsmrf/numeric_format.hpp"

namespace vsmrf {

namespace {

std::string describe(ConstraintViolation::Kind kind, std::size_t coord, double bound, double value,
                     std::optional<std::size_t> sample) {
    std::string msg = "natural parameter " + std::to_string(coord) + " = " + format_double(value);
    switch (kind) {
        case ConstraintViolation::Kind::lower:
            msg += " violates lower bound > " + format_double(bound);
            break;
        case ConstraintViolation::Kind::upper:
            msg += " violates upper bound < " + format_double(bound);
            break;
        case ConstraintViolation::Kind::equality:
            msg = "equality constraint " + std::to_string(coord) + " has residual " +
                  format_double(value);
            break;
        case ConstraintViolation::Kind::non_finite:
            msg += " is not finite";
            break;
    }
    if (sample) msg += " (sample " + std::to_string(*sample) + ")";
    return msg;
}

std::string with_position(const std::string& what, std::size_t line, std::size_t column) {
    if (line == 0) return what;
    std::string pos = "line " + std::to_string(line);
    if (column != 0) pos += ", column " + std::to_string(column);
    return pos + ": " + what;
}

}  // namespace

ConstraintViolation::ConstraintViolation(Kind kind, std::size_t coordinate, double bound,
                                         double value, std::optional<std::size_t> sample)
    : std::domain_error(describe(kind, coordinate, bound, value, sample)),
      kind_(kind),
      coordinate_(coordinate),
      bound_(bound),
      value_(value),
      sample_(sample) {}

ConstraintViolation ConstraintViolation::at_sample(std::size_t i) const {
    return ConstraintViolation(kind_, coordinate_, bound_, value_, i);
}

ParseError::ParseError(const std::string& what, std::size_t line, std::size_t column)
    : std::runtime_error(with_position(what, line, column)), message_(what), line_(line), column_(column) {}

}  // namespace vsmrf
