#pragma once

#include <stdexcept>
#include <string>

namespace iotwm {

// A requested configuration has an empty feasible region. `binding` names
// the constraint that ruled everything out (used in CLI error output).
class infeasible_error : public std::runtime_error {
public:
    infeasible_error(const std::string& msg, std::string binding_constraint)
        : std::runtime_error(msg), binding(std::move(binding_constraint)) {}
    std::string binding;
};

}  // namespace iotwm
