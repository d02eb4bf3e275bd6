#include "distscale/toml_lite.hpp"

#include <cctype>
#include <charconv>
#include <limits>
#include <vector>

#include "distscale/error.hpp"

namespace distscale {

namespace {

using json = nlohmann::json;

class Parser {
public:
    explicit Parser(const std::string& text) : s_(text) {}

    json run() {
        json root = json::object();
        json* table = &root;
        while (true) {
            skip_ws_comments_newlines();
            if (eof()) break;
            if (peek() == '[') {
                table = parse_header(root);
            } else {
                parse_keyval(*table);
            }
            expect_line_end();
        }
        return root;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw Error(ErrorCode::Parse, "toml:" + std::to_string(line_) + ": " + what);
    }

    bool eof() const { return pos_ >= s_.size(); }
    char peek(std::size_t ahead = 0) const { return pos_ + ahead < s_.size() ? s_[pos_ + ahead] : '\0'; }
    char get() {
        const char c = s_[pos_++];
        if (c == '\n') ++line_;
        return c;
    }

    void skip_ws() {
        while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
    }
    void skip_comment() {
        if (peek() == '#') {
            while (!eof() && peek() != '\n') ++pos_;
        }
    }
    void skip_ws_comments_newlines() {
        while (!eof()) {
            skip_ws();
            skip_comment();
            if (peek() == '\n' || peek() == '\r') {
                get();
            } else {
                break;
            }
        }
    }
    void expect_line_end() {
        skip_ws();
        skip_comment();
        if (peek() == '\r') ++pos_;
        if (eof()) return;
        if (peek() != '\n') fail(std::string("unexpected character '") + peek() + "'");
        get();
    }

    std::string parse_key_part() {
        skip_ws();
        if (peek() == '"' || peek() == '\'') return parse_string();
        std::string k;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) {
            k.push_back(get());
        }
        if (k.empty()) fail("expected a key");
        return k;
    }

    std::vector<std::string> parse_key() {
        std::vector<std::string> parts{parse_key_part()};
        skip_ws();
        while (peek() == '.') {
            ++pos_;
            parts.push_back(parse_key_part());
            skip_ws();
        }
        return parts;
    }

    json* descend(json& base, const std::vector<std::string>& path, std::size_t count) {
        json* cur = &base;
        for (std::size_t i = 0; i < count; ++i) {
            json& next = (*cur)[path[i]];
            if (next.is_null()) next = json::object();
            if (next.is_array()) {
                if (next.empty() || !next.back().is_object()) fail("key '" + path[i] + "' is not a table");
                cur = &next.back();
            } else if (next.is_object()) {
                cur = &next;
            } else {
                fail("key '" + path[i] + "' is not a table");
            }
        }
        return cur;
    }

    json* parse_header(json& root) {
        ++pos_;
        const bool array = peek() == '[';
        if (array) ++pos_;
        const auto path = parse_key();
        if (get() != ']') fail("expected ']'");
        if (array && get() != ']') fail("expected ']]'");
        json* parent = descend(root, path, path.size() - 1);
        json& slot = (*parent)[path.back()];
        if (array) {
            if (slot.is_null()) slot = json::array();
            if (!slot.is_array()) fail("'" + path.back() + "' is not an array of tables");
            slot.push_back(json::object());
            return &slot.back();
        }
        if (slot.is_null()) slot = json::object();
        if (!slot.is_object()) fail("'" + path.back() + "' is already defined as a value");
        return &slot;
    }

    void parse_keyval(json& table) {
        const auto path = parse_key();
        skip_ws();
        if (get() != '=') fail("expected '='");
        skip_ws();
        json* parent = descend(table, path, path.size() - 1);
        if (parent->contains(path.back())) fail("duplicate key '" + path.back() + "'");
        (*parent)[path.back()] = parse_value();
    }

    std::string parse_string() {
        const char quote = get();
        std::string out;
        while (true) {
            if (eof() || peek() == '\n') fail("unterminated string");
            char c = get();
            if (c == quote) break;
            if (c == '\\' && quote == '"') {
                const char e = get();
                switch (e) {
                    case 'n': out.push_back('\n'); break;
                    case 't': out.push_back('\t'); break;
                    case 'r': out.push_back('\r'); break;
                    case '"': out.push_back('"'); break;
                    case '\\': out.push_back('\\'); break;
                    default: fail(std::string("unsupported escape \\") + e);
                }
            } else {
                out.push_back(c);
            }
        }
        return out;
    }

    json parse_number_or_bool() {
        std::string tok;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' || peek() == '-' ||
                          peek() == '.' || peek() == '_')) {
            tok.push_back(get());
        }
        if (tok == "true") return true;
        if (tok == "false") return false;
        std::string clean;
        for (char c : tok) {
            if (c != '_') clean.push_back(c);
        }
        if (clean == "inf" || clean == "+inf") return std::numeric_limits<double>::infinity();
        if (clean == "-inf") return -std::numeric_limits<double>::infinity();
        if (clean == "nan" || clean == "+nan" || clean == "-nan") return std::numeric_limits<double>::quiet_NaN();
        const char* first = clean.data();
        const char* last = clean.data() + clean.size();
        if (first != last && *first == '+') ++first;
        const bool is_float = clean.find_first_of(".eE") != std::string::npos;
        if (!is_float) {
            std::int64_t v = 0;
            const auto [ptr, ec] = std::from_chars(first, last, v);
            if (ec == std::errc{} && ptr == last && first != last) return v;
        } else {
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(first, last, v);
            if (ec == std::errc{} && ptr == last && first != last) return v;
        }
        fail("invalid value '" + tok + "'");
    }

    json parse_value() {
        const char c = peek();
        if (c == '"' || c == '\'') {
            if (peek(1) == c && peek(2) == c) fail("multi-line strings are not supported");
            return parse_string();
        }
        if (c == '[') return parse_array();
        if (c == '{') return parse_inline_table();
        return parse_number_or_bool();
    }

    json parse_array() {
        ++pos_;
        json arr = json::array();
        while (true) {
            skip_ws_comments_newlines();
            if (peek() == ']') {
                ++pos_;
                return arr;
            }
            arr.push_back(parse_value());
            skip_ws_comments_newlines();
            if (peek() == ',') {
                ++pos_;
            } else if (peek() != ']') {
                fail("expected ',' or ']' in array");
            }
        }
    }

    json parse_inline_table() {
        ++pos_;
        json t = json::object();
        skip_ws();
        if (peek() == '}') {
            ++pos_;
            return t;
        }
        while (true) {
            parse_keyval(t);
            skip_ws();
            const char c = get();
            if (c == '}') return t;
            if (c != ',') fail("expected ',' or '}' in inline table");
            skip_ws();
        }
    }

    const std::string& s_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
};

}  // namespace

nlohmann::json parse_toml(const std::string& text) { return Parser(text).run(); }

}  // namespace distscale
