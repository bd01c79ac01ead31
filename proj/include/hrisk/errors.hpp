#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hrisk {

/// Raised for any invalid user input: malformed files, inconsistent
/// dimensions, out-of-range arguments. The CLI maps it to exit status 2.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parse failure with 1-based line/column context (0 = not applicable).
class ParseError : public InputError {
public:
    ParseError(const std::string& source, std::size_t line, std::size_t column,
               const std::string& what)
        : InputError(format(source, line, column, what)), line_(line), column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    static std::string format(const std::string& source, std::size_t line,
                              std::size_t column, const std::string& what) {
        std::string s = source.empty() ? std::string("<input>") : source;
        if (line > 0) s += ":" + std::to_string(line);
        if (line > 0 && column > 0) s += ":" + std::to_string(column);
        return s + ": " + what;
    }

    std::size_t line_;
    std::size_t column_;
};

} // namespace hrisk
