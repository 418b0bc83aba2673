#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace bvp {

/// Broad failure class; the CLI maps these onto exit codes.
enum class ErrorKind { validation, numerical };

/// Library error carrying a stable machine-readable code such as
/// "grid-too-coarse" or "integration-blowup".
class Error : public std::runtime_error
{
public:
    Error(ErrorKind kind, std::string code, const std::string& detail = {})
        : std::runtime_error(detail.empty() ? code : code + ": " + detail)
        , kind_(kind)
        , code_(std::move(code))
        , detail_(detail)
    {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorKind kind_;
    std::string code_;
    std::string detail_;
};

inline Error validation_error(std::string code, const std::string& detail = {})
{
    return Error(ErrorKind::validation, std::move(code), detail);
}

inline Error numerical_error(std::string code, const std::string& detail = {})
{
    return Error(ErrorKind::numerical, std::move(code), detail);
}

} // namespace bvp
