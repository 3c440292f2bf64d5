#pragma once

#include <stdexcept>
#include <string>

namespace ioth {

// All recoverable tool failures are thrown as IothError with the name of the
// pipeline stage that raised them. The CLI catches these at the top level,
// prints "error [stage]: message" to stderr and exits 1; anything else that
// escapes is a bug.
class IothError : public std::runtime_error {
public:
    IothError(std::string stage, const std::string& message)
        : std::runtime_error(message), stage_(std::move(stage)) {}

    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

}  // namespace ioth
