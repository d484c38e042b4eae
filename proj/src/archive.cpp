#include "ndae/archive.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ndae {

void Archive::set_meta(const std::string& key, const std::string& value) { meta_[key] = value; }

std::string Archive::meta_or(const std::string& key, const std::string& fallback) const {
    auto it = meta_.find(key);
    return it == meta_.end() ? fallback : it->second;
}

void Archive::add(const std::string& name, const Eigen::MatrixXd& m) {
    entries_.emplace_back(name, m);
}

void Archive::add(const std::string& name, const Eigen::VectorXd& v) {
    entries_.emplace_back(name, Eigen::MatrixXd(v));
}

bool Archive::has(const std::string& name) const {
    for (const auto& [k, _] : entries_)
        if (k == name) return true;
    return false;
}

const Eigen::MatrixXd& Archive::get(const std::string& name) const {
    for (const auto& [k, m] : entries_)
        if (k == name) return m;
    throw Error("archive entry not found: " + name);
}

Eigen::VectorXd Archive::get_vector(const std::string& name) const {
    const Eigen::MatrixXd& m = get(name);
    if (m.cols() != 1) throw Error("archive entry is not a vector: " + name);
    return m.col(0);
}

void Archive::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write archive: " + path);
    out << "NDAR1\n";
    for (const auto& [k, v] : meta_) out << "meta " << k << " " << v << "\n";
    for (const auto& [name, m] : entries_)
        out << "mat " << name << " " << m.rows() << " " << m.cols() << "\n";
    out << "END\n";
    for (const auto& [name, m] : entries_)
        out.write(reinterpret_cast<const char*>(m.data()),
                  static_cast<std::streamsize>(sizeof(double)) * m.size());
    if (!out) throw Error("failed writing archive: " + path);
}

Archive Archive::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open archive: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "NDAR1")
        throw Error("not an archive file: " + path);

    Archive a;
    std::vector<std::pair<std::string, std::pair<Eigen::Index, Eigen::Index>>> dims;
    while (std::getline(in, line)) {
        if (line == "END") break;
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "meta") {
            std::string key;
            ss >> key;
            std::string rest;
            std::getline(ss, rest);
            if (!rest.empty() && rest.front() == ' ') rest.erase(0, 1);
            a.meta_[key] = rest;
        } else if (tag == "mat") {
            std::string name;
            Eigen::Index r, c;
            ss >> name >> r >> c;
            if (!ss) throw Error("malformed archive header in " + path);
            dims.emplace_back(name, std::make_pair(r, c));
        } else {
            throw Error("unknown archive header tag '" + tag + "' in " + path);
        }
    }
    for (const auto& [name, rc] : dims) {
        Eigen::MatrixXd m(rc.first, rc.second);
        in.read(reinterpret_cast<char*>(m.data()),
                static_cast<std::streamsize>(sizeof(double)) * m.size());
        if (!in) throw Error("archive truncated: " + path);
        a.entries_.emplace_back(name, std::move(m));
    }
    return a;
}

void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const Eigen::MatrixXd& rows) {
    if (columns.size() != static_cast<size_t>(rows.cols()))
        throw Error("csv header/column mismatch for " + path);
    std::ofstream out(path);
    if (!out) throw Error("cannot write csv: " + path);
    for (size_t i = 0; i < columns.size(); ++i)
        out << columns[i] << (i + 1 == columns.size() ? '\n' : ',');
    char buf[40];
    for (Eigen::Index i = 0; i < rows.rows(); ++i)
        for (Eigen::Index j = 0; j < rows.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", rows(i, j));
            out << buf << (j + 1 == rows.cols() ? '\n' : ',');
        }
}

std::string content_hash(const std::string& text) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
    return buf;
}

}  // namespace ndae
