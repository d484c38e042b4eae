#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ndae/grid.hpp"

namespace ndae {

inline constexpr const char* kToolVersion = "0.1.0";

/// Container of named dense matrices with a small text header, written as a
/// deterministic binary file (no timestamps, fixed entry order).
///
///   NDAR1
///   meta <key> <value...>
///   mat <name> <rows> <cols>
///   END
///   <column-major doubles for each mat, in listed order>
class Archive {
public:
    void set_meta(const std::string& key, const std::string& value);
    std::string meta_or(const std::string& key, const std::string& fallback) const;

    void add(const std::string& name, const Eigen::MatrixXd& m);
    void add(const std::string& name, const Eigen::VectorXd& v);
    bool has(const std::string& name) const;
    const Eigen::MatrixXd& get(const std::string& name) const;
    Eigen::VectorXd get_vector(const std::string& name) const;

    const std::vector<std::pair<std::string, Eigen::MatrixXd>>& entries() const {
        return entries_;
    }
    const std::map<std::string, std::string>& meta() const { return meta_; }

    void save(const std::string& path) const;
    static Archive load(const std::string& path);

private:
    std::vector<std::pair<std::string, Eigen::MatrixXd>> entries_;
    std::map<std::string, std::string> meta_;
};

/// Plain CSV with a header row; deterministic %.17g formatting.
void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const Eigen::MatrixXd& rows);

/// FNV-1a hash of a text blob, hex-encoded; used to stamp configs into
/// artifact headers.
std::string content_hash(const std::string& text);

}  // namespace ndae
