#include "spt/json_util.hpp"

#include <cmath>

namespace spt {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    require(j.is_object(), where + ": expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) throw ValidationError(where + ": unknown key '" + it.key() + "'");
    }
}

double get_num(const json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) throw ValidationError(where + ": missing '" + key + "'");
    if (!it->is_number()) throw ValidationError(where + ": '" + key + "' must be a number");
    double v = it->get<double>();
    if (!std::isfinite(v)) throw ValidationError(where + ": '" + key + "' must be finite");
    return v;
}

double get_num(const json& j, const char* key, double fallback, const std::string& where) {
    return j.contains(key) ? get_num(j, key, where) : fallback;
}

int get_int(const json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) throw ValidationError(where + ": missing '" + key + "'");
    if (!it->is_number_integer()) throw ValidationError(where + ": '" + key + "' must be an integer");
    return it->get<int>();
}

int get_int(const json& j, const char* key, int fallback, const std::string& where) {
    return j.contains(key) ? get_int(j, key, where) : fallback;
}

std::string get_str(const json& j, const char* key, const std::string& fallback, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_string()) throw ValidationError(where + ": '" + key + "' must be a string");
    return it->get<std::string>();
}

Vec get_vec(const json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) throw ValidationError(where + ": missing '" + key + "'");
    if (!it->is_array()) throw ValidationError(where + ": '" + key + "' must be an array");
    Vec v(it->size());
    for (std::size_t i = 0; i < it->size(); ++i) {
        if (!(*it)[i].is_number()) throw ValidationError(where + ": '" + key + "' must hold numbers");
        v[i] = (*it)[i].get<double>();
    }
    return v;
}

Mat get_mat(const json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) throw ValidationError(where + ": missing '" + key + "'");
    if (!it->is_array() || it->empty()) throw ValidationError(where + ": '" + key + "' must be a nonempty array of rows");
    const std::size_t rows = it->size();
    const std::size_t cols = (*it)[0].is_array() ? (*it)[0].size() : 0;
    Mat m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const auto& row = (*it)[r];
        if (!row.is_array() || row.size() != cols) throw ValidationError(where + ": '" + key + "' is ragged");
        for (std::size_t c = 0; c < cols; ++c) {
            if (!row[c].is_number()) throw ValidationError(where + ": '" + key + "' must hold numbers");
            m(r, c) = row[c].get<double>();
        }
    }
    return m;
}

}  // namespace spt
