#include "ndae/kvfile.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace ndae {

const KvNode* KvNode::find(const std::string& name) const {
    for (const KvNode& c : children)
        if (c.key == name) return &c;
    return nullptr;
}

const KvNode& KvNode::require(const std::string& name) const {
    const KvNode* c = find(name);
    if (!c) fail("missing required entry '" + name + "'");
    return *c;
}

std::vector<const KvNode*> KvNode::all(const std::string& name) const {
    std::vector<const KvNode*> out;
    for (const KvNode& c : children)
        if (c.key == name) out.push_back(&c);
    return out;
}

double KvNode::value_num(size_t i) const {
    if (i >= values.size()) fail("entry '" + key + "' is missing a numeric field");
    char* end = nullptr;
    const double v = std::strtod(values[i].c_str(), &end);
    if (end == values[i].c_str() || *end != '\0')
        fail("entry '" + key + "': '" + values[i] + "' is not a number");
    return v;
}

long KvNode::value_int(size_t i) const {
    const double v = value_num(i);
    const long l = static_cast<long>(v);
    if (static_cast<double>(l) != v) fail("entry '" + key + "' expects an integer");
    return l;
}

const std::string& KvNode::value_str(size_t i) const {
    if (i >= values.size()) fail("entry '" + key + "' is missing a field");
    return values[i];
}

double KvNode::num(const std::string& name) const { return require(name).value_num(0); }

double KvNode::num_or(const std::string& name, double fallback) const {
    const KvNode* c = find(name);
    return c ? c->value_num(0) : fallback;
}

long KvNode::integer(const std::string& name) const { return require(name).value_int(0); }

long KvNode::integer_or(const std::string& name, long fallback) const {
    const KvNode* c = find(name);
    return c ? c->value_int(0) : fallback;
}

std::string KvNode::str(const std::string& name) const { return require(name).value_str(0); }

std::string KvNode::str_or(const std::string& name, const std::string& fallback) const {
    const KvNode* c = find(name);
    return c ? c->value_str(0) : fallback;
}

void KvNode::fail(const std::string& msg) const {
    throw ParseError("line " + std::to_string(line) + ": " + msg);
}

namespace {

struct Token {
    std::string text;
    int line;
};

std::vector<Token> tokenize(const std::string& text) {
    std::vector<Token> toks;
    int line = 1;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            toks.push_back({cur, line});
            cur.clear();
        }
    };
    for (size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '#') {
            flush();
            while (i < text.size() && text[i] != '\n') ++i;
            ++line;
            continue;
        }
        if (c == '\n') {
            flush();
            ++line;
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            flush();
            continue;
        }
        if (c == '{' || c == '}') {
            flush();
            toks.push_back({std::string(1, c), line});
            continue;
        }
        cur.push_back(c);
    }
    flush();
    return toks;
}

}  // namespace

KvNode parse_kv_text(const std::string& text, const std::string& origin) {
    const std::vector<Token> toks = tokenize(text);
    KvNode root;
    root.key = origin;
    std::vector<KvNode*> stack{&root};

    size_t i = 0;
    while (i < toks.size()) {
        const Token& t = toks[i];
        if (t.text == "}") {
            if (stack.size() == 1)
                throw ParseError(origin + ": line " + std::to_string(t.line) +
                                 ": unmatched closing brace");
            stack.pop_back();
            ++i;
            continue;
        }
        if (t.text == "{")
            throw ParseError(origin + ": line " + std::to_string(t.line) +
                             ": block without a key");

        KvNode node;
        node.key = t.text;
        node.line = t.line;
        ++i;
        while (i < toks.size() && toks[i].text != "{" && toks[i].text != "}" &&
               toks[i].line == t.line) {
            node.values.push_back(toks[i].text);
            ++i;
        }
        KvNode& placed = stack.back()->children.emplace_back(std::move(node));
        if (i < toks.size() && toks[i].text == "{") {
            stack.push_back(&placed);
            ++i;
        }
    }
    if (stack.size() != 1) throw ParseError(origin + ": unclosed block at end of file");
    return root;
}

KvNode parse_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_kv_text(ss.str(), path);
}

}  // namespace ndae
