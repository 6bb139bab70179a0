#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "vvc/neural/tape.hpp"

namespace vvc::neural {

// Layout:
//   {"format": "vvc-checkpoint-v1",
//    "tensors": [{"name": "...", "rows": R, "cols": C, "data": [row-major values]}, ...],
//    "meta": {...}}            (meta is free-form and optional)
inline constexpr const char* kCheckpointFormat = "vvc-checkpoint-v1";

template <class T>
nlohmann::json tensor_to_json(const std::string& name, const Matrix<T>& m) {
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(static_cast<double>(m(r, c)));
    }
    return {{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

template <class T>
Matrix<T> tensor_from_json(const nlohmann::json& j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto& data = j.at("data");
    if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols)) {
        throw std::invalid_argument("checkpoint tensor '" + j.value("name", std::string("?")) + "' has bad shape");
    }
    Matrix<T> m(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = static_cast<T>(data[k++].get<double>());
    }
    return m;
}

template <class T>
nlohmann::json checkpoint_json(const std::vector<const std::vector<Parameter<T>>*>& groups,
                               const nlohmann::json& meta = nlohmann::json::object()) {
    nlohmann::json tensors = nlohmann::json::array();
    for (const auto* g : groups) {
        for (const auto& p : *g) tensors.push_back(tensor_to_json(p.name, p.value));
    }
    return {{"format", kCheckpointFormat}, {"tensors", tensors}, {"meta", meta}};
}

/// Restores every parameter of the given groups by name. Missing names or shape changes throw.
template <class T>
void restore_checkpoint(const nlohmann::json& j, const std::vector<std::vector<Parameter<T>>*>& groups) {
    if (j.value("format", std::string()) != kCheckpointFormat) throw std::invalid_argument("unknown checkpoint format");
    std::map<std::string, const nlohmann::json*> by_name;
    for (const auto& t : j.at("tensors")) by_name[t.at("name").get<std::string>()] = &t;
    for (auto* g : groups) {
        for (auto& p : *g) {
            const auto it = by_name.find(p.name);
            if (it == by_name.end()) throw std::invalid_argument("checkpoint lacks tensor '" + p.name + "'");
            Matrix<T> m = tensor_from_json<T>(*it->second);
            if (m.rows() != p.value.rows() || m.cols() != p.value.cols()) {
                throw std::invalid_argument("checkpoint tensor '" + p.name + "' has a different shape");
            }
            p.value = std::move(m);
        }
    }
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump() << '\n';
}

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    return nlohmann::json::parse(in);
}

}  // namespace vvc::neural
