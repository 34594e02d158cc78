#include "dale/textdoc.hpp"

#include "dale/errors.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

namespace dale {

namespace {

struct Line {
    int indent = 0;
    std::string content;
    int number = 0;
};

struct Parser {
    std::vector<Line> lines;
    std::size_t pos = 0;
    std::string filename;

    [[noreturn]] void fail(int line, const std::string& what) const {
        throw parse_error(filename, line, what);
    }

    bool done() const { return pos >= lines.size(); }
    const Line& peek() const { return lines[pos]; }

    static bool is_list_item(const std::string& content) {
        return content == "-" || content.rfind("- ", 0) == 0;
    }

    std::string unquote(const std::string& text, int line) const {
        if (text.empty() || text.front() != '"') return text;
        std::string out;
        std::size_t i = 1;
        while (i < text.size()) {
            char c = text[i];
            if (c == '\\') {
                if (i + 1 >= text.size()) fail(line, "dangling escape");
                char e = text[i + 1];
                if (e != '"' && e != '\\') fail(line, "unsupported escape");
                out.push_back(e);
                i += 2;
            } else if (c == '"') {
                if (i + 1 != text.size()) fail(line, "content after closing quote");
                return out;
            } else {
                out.push_back(c);
                ++i;
            }
        }
        fail(line, "unterminated quoted scalar");
    }

    TextNode scalar_node(const std::string& text, int line) const {
        TextNode node = TextNode::scalar(unquote(text, line));
        node.source_file = filename;
        node.source_line = line;
        return node;
    }

    TextNode parse_block(int indent) {
        if (done() || peek().indent != indent)
            fail(done() ? (lines.empty() ? 1 : lines.back().number) : peek().number,
                 "expected a block indented by " + std::to_string(indent) + " spaces");
        if (is_list_item(peek().content)) return parse_list(indent);
        return parse_map(indent);
    }

    TextNode parse_list(int indent) {
        TextNode node = TextNode::list();
        node.source_file = filename;
        node.source_line = peek().number;
        while (!done() && peek().indent == indent && is_list_item(peek().content)) {
            const int line = peek().number;
            std::string rest = peek().content == "-" ? "" : peek().content.substr(2);
            if (rest.empty()) {
                ++pos;
                if (!done() && peek().indent > indent) {
                    if (peek().indent != indent + 2) fail(peek().number, "bad indentation");
                    node.push_back(parse_block(indent + 2));
                } else {
                    node.push_back(scalar_node("", line));
                }
            } else if (rest.front() != '"' &&
                       (rest.find(": ") != std::string::npos || rest.back() == ':')) {
                // Inline first map entry; remaining entries continue two
                // spaces deeper than the dash.
                lines[pos] = Line{indent + 2, rest, line};
                node.push_back(parse_block(indent + 2));
            } else {
                ++pos;
                node.push_back(scalar_node(rest, line));
            }
        }
        return node;
    }

    TextNode parse_map(int indent) {
        TextNode node = TextNode::map();
        node.source_file = filename;
        node.source_line = peek().number;
        while (!done() && peek().indent == indent && !is_list_item(peek().content)) {
            const int line = peek().number;
            const std::string& content = peek().content;
            std::string key, rest;
            if (content.back() == ':' && content.find(": ") == std::string::npos) {
                key = content.substr(0, content.size() - 1);
            } else {
                auto sep = content.find(": ");
                if (sep == std::string::npos) fail(line, "expected 'key: value'");
                key = content.substr(0, sep);
                rest = content.substr(sep + 2);
            }
            if (key.empty() || key.find_first_of(":\"") != std::string::npos)
                fail(line, "bad key");
            if (node.has(key)) fail(line, "duplicate key '" + key + "'");

            if (!rest.empty()) {
                ++pos;
                node[key] = scalar_node(rest, line);
            } else {
                ++pos;
                if (!done() && peek().indent > indent) {
                    if (peek().indent != indent + 2) fail(peek().number, "bad indentation");
                    node[key] = parse_block(indent + 2);
                } else {
                    node[key] = scalar_node("", line);
                }
            }
        }
        return node;
    }
};

bool needs_quoting(const std::string& value) {
    if (value.empty()) return true;
    if (value.front() == '"' || value.front() == ' ' || value.back() == ' ') return true;
    if (value == "-" || value.rfind("- ", 0) == 0) return true;
    if (value.find(": ") != std::string::npos || value.back() == ':') return true;
    if (value.find('#') != std::string::npos) return true;
    if (value.find('\n') != std::string::npos) return true;
    return false;
}

void check_key(const std::string& key) {
    if (key.empty() || key.find_first_of(":\"#\n") != std::string::npos ||
        key.front() == '-' || key.front() == ' ' || key.back() == ' ')
        throw std::invalid_argument("textdoc: key '" + key + "' cannot be serialized");
}

std::string quoted(const std::string& value) {
    if (!needs_quoting(value)) return value;
    std::string out = "\"";
    for (char c : value) {
        if (c == '\n') throw std::invalid_argument("textdoc: scalars may not contain newlines");
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void write_node(const TextNode& node, int indent, std::string& out) {
    const std::string pad(static_cast<std::size_t>(indent), ' ');
    switch (node.kind()) {
    case TextNode::Kind::scalar:
        throw std::invalid_argument("textdoc: top-level scalar blocks are not supported");
    case TextNode::Kind::map:
        if (node.entries().empty())
            throw std::invalid_argument("textdoc: empty maps cannot be serialized");
        for (const auto& [key, value] : node.entries()) {
            check_key(key);
            if (value.is_scalar()) {
                out += pad + key + ": " + quoted(value.raw()) + "\n";
            } else {
                out += pad + key + ":\n";
                write_node(value, indent + 2, out);
            }
        }
        break;
    case TextNode::Kind::list:
        if (node.items().empty())
            throw std::invalid_argument("textdoc: empty lists cannot be serialized");
        for (const auto& item : node.items()) {
            if (item.is_scalar()) {
                out += pad + "- " + quoted(item.raw()) + "\n";
            } else if (item.is_map() && !item.entries().empty() && item.entries().front().second.is_scalar()) {
                const auto& [first_key, first_value] = item.entries().front();
                check_key(first_key);
                out += pad + "- " + first_key + ": " + quoted(first_value.raw()) + "\n";
                TextNode tail = TextNode::map();
                for (std::size_t i = 1; i < item.entries().size(); ++i)
                    tail[item.entries()[i].first] = item.entries()[i].second;
                if (!tail.entries().empty()) write_node(tail, indent + 2, out);
            } else {
                out += pad + "-\n";
                write_node(item, indent + 2, out);
            }
        }
        break;
    }
}

} // namespace

TextNode TextNode::scalar(std::string value) {
    TextNode node;
    node.kind_ = Kind::scalar;
    node.scalar_ = std::move(value);
    return node;
}

TextNode TextNode::map() {
    TextNode node;
    node.kind_ = Kind::map;
    return node;
}

TextNode TextNode::list() {
    TextNode node;
    node.kind_ = Kind::list;
    return node;
}

const std::string& TextNode::raw() const {
    if (!is_scalar()) throw parse_error(source_file, source_line, "expected a scalar");
    return scalar_;
}

std::string TextNode::as_string() const { return raw(); }

long long TextNode::as_int() const {
    const std::string& text = raw();
    long long value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw parse_error(source_file, source_line, "'" + text + "' is not an integer");
    return value;
}

double TextNode::as_double() const {
    const std::string& text = raw();
    double value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw parse_error(source_file, source_line, "'" + text + "' is not a number");
    return value;
}

bool TextNode::as_bool() const {
    const std::string& text = raw();
    if (text == "true") return true;
    if (text == "false") return false;
    throw parse_error(source_file, source_line, "'" + text + "' is not a boolean");
}

bool TextNode::has(const std::string& key) const { return find(key) != nullptr; }

const TextNode* TextNode::find(const std::string& key) const {
    if (!is_map()) return nullptr;
    for (const auto& [k, v] : entries_)
        if (k == key) return &v;
    return nullptr;
}

const TextNode& TextNode::at(const std::string& key) const {
    const TextNode* node = find(key);
    if (node == nullptr)
        throw parse_error(source_file, source_line, "missing key '" + key + "'");
    return *node;
}

TextNode& TextNode::operator[](const std::string& key) {
    if (!is_map()) throw parse_error(source_file, source_line, "expected a map");
    for (auto& [k, v] : entries_)
        if (k == key) return v;
    entries_.emplace_back(key, TextNode());
    return entries_.back().second;
}

const std::vector<std::pair<std::string, TextNode>>& TextNode::entries() const {
    if (!is_map()) throw parse_error(source_file, source_line, "expected a map");
    return entries_;
}

void TextNode::push_back(TextNode item) {
    if (!is_list()) throw parse_error(source_file, source_line, "expected a list");
    items_.push_back(std::move(item));
}

const std::vector<TextNode>& TextNode::items() const {
    if (!is_list()) throw parse_error(source_file, source_line, "expected a list");
    return items_;
}

TextNode parse_textdoc(std::istream& in, const std::string& filename) {
    Parser parser;
    parser.filename = filename;
    std::string raw;
    int number = 0;
    while (std::getline(in, raw)) {
        ++number;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        std::size_t indent = 0;
        while (indent < raw.size() && raw[indent] == ' ') ++indent;
        std::string content = raw.substr(indent);
        if (content.empty() || content.front() == '#') continue;
        if (indent % 2 != 0) throw parse_error(filename, number, "odd indentation");
        parser.lines.push_back(Line{static_cast<int>(indent), std::move(content), number});
    }
    if (parser.lines.empty()) {
        TextNode node = TextNode::map();
        node.source_file = filename;
        node.source_line = 1;
        return node;
    }
    if (parser.lines.front().indent != 0)
        throw parse_error(filename, parser.lines.front().number, "document must start at column 0");
    TextNode root = parser.parse_block(0);
    if (!parser.done()) parser.fail(parser.peek().number, "unexpected content after document");
    return root;
}

TextNode parse_textdoc_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return parse_textdoc(in, path.filename().string());
}

std::string write_textdoc(const TextNode& root) {
    std::string out;
    write_node(root, 0, out);
    return out;
}

void write_textdoc_file(const TextNode& root, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << write_textdoc(root);
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

} // namespace dale
