#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace dale {

/// Node of a restricted hierarchical key-value document: scalars, maps and
/// lists with two-space indentation. This covers the subset of YAML the
/// on-disk metadata files use; unknown keys survive a parse untouched.
class TextNode {
public:
    enum class Kind { scalar, map, list };

    TextNode() = default;
    static TextNode scalar(std::string value);
    static TextNode map();
    static TextNode list();

    Kind kind() const { return kind_; }
    bool is_scalar() const { return kind_ == Kind::scalar; }
    bool is_map() const { return kind_ == Kind::map; }
    bool is_list() const { return kind_ == Kind::list; }

    // Scalar access. Typed getters throw parse_error (carrying the source
    // file and line) when the text does not parse as the requested type.
    const std::string& raw() const;
    std::string as_string() const;
    long long as_int() const;
    double as_double() const;
    bool as_bool() const;

    // Map access; entry order is preserved.
    bool has(const std::string& key) const;
    const TextNode* find(const std::string& key) const;
    const TextNode& at(const std::string& key) const;
    TextNode& operator[](const std::string& key); ///< inserts an empty scalar if missing
    const std::vector<std::pair<std::string, TextNode>>& entries() const;

    // List access.
    void push_back(TextNode item);
    const std::vector<TextNode>& items() const;

    // Source position for error reporting; zero when built in memory.
    std::string source_file;
    int source_line = 0;

private:
    Kind kind_ = Kind::scalar;
    std::string scalar_;
    std::vector<std::pair<std::string, TextNode>> entries_;
    std::vector<TextNode> items_;
};

TextNode parse_textdoc(std::istream& in, const std::string& filename);
TextNode parse_textdoc_file(const std::filesystem::path& path);

std::string write_textdoc(const TextNode& root);
void write_textdoc_file(const TextNode& root, const std::filesystem::path& path);

} // namespace dale
