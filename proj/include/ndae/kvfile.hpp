#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ndae/grid.hpp"

namespace ndae {

struct ParseError : Error {
    using Error::Error;
};

/// Node of the nested key-value format used for grids, scenarios and
/// experiment configs:
///
///   section {
///     entry value1 value2
///     block key value { nested ... }
///   }
///
/// Tokens are whitespace-separated; `#` starts a comment.
struct KvNode {
    std::string key;
    std::vector<std::string> values;
    std::vector<KvNode> children;
    int line = 0;

    const KvNode* find(const std::string& name) const;
    const KvNode& require(const std::string& name) const;
    std::vector<const KvNode*> all(const std::string& name) const;

    bool has(const std::string& name) const { return find(name) != nullptr; }

    double value_num(size_t i = 0) const;
    long value_int(size_t i = 0) const;
    const std::string& value_str(size_t i = 0) const;

    // child lookup helpers: child `name`, first value
    double num(const std::string& name) const;
    double num_or(const std::string& name, double fallback) const;
    long integer(const std::string& name) const;
    long integer_or(const std::string& name, long fallback) const;
    std::string str(const std::string& name) const;
    std::string str_or(const std::string& name, const std::string& fallback) const;

    [[noreturn]] void fail(const std::string& msg) const;
};

KvNode parse_kv_text(const std::string& text, const std::string& origin = "<memory>");
KvNode parse_kv_file(const std::string& path);

}  // namespace ndae
