#include "activegp/types.hpp"

#include <string>

#include "activegp/errors.hpp"

namespace activegp {

void Box::validate(const char* what) const
{
    if (lower.size() != upper.size() || lower.size() == 0)
        throw ContractViolation(std::string(what) + ": bound vectors must be non-empty and equally sized");
    if (!lower.allFinite() || !upper.allFinite() || !(lower.array() < upper.array()).all())
        throw ContractViolation(std::string(what) + ": bounds must be finite with min < max in every dimension");
}

} // namespace activegp
