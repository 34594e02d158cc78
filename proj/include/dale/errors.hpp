#pragma once

#include <stdexcept>
#include <string>

namespace dale {

/// Packet failed its modular-sum checksum on decode.
class integrity_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Symbol stream contained an invalid Manchester pair (00 or 11).
class manchester_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A ratio or fit was requested against a zero-valued denominator.
class degenerate_input : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Too few readings to compute the requested statistic.
class insufficient_data : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Pearson correlation of a constant series.
class undefined_correlation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dataset files disagree with each other (labels vs metadata, duplicate
/// channel indices, ...).
class consistency_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed file content. Carries file name and 1-based line number.
class parse_error : public std::runtime_error {
public:
    parse_error(std::string file, int line, const std::string& what)
        : std::runtime_error(file + ":" + std::to_string(line) + ": " + what),
          file_(std::move(file)),
          line_(line) {}

    const std::string& file() const { return file_; }
    int line() const { return line_; }

private:
    std::string file_;
    int line_;
};

} // namespace dale
