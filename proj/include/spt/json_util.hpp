#pragma once

#include "spt/common.hpp"

#include "json.hpp"

#include <initializer_list>
#include <string>

namespace spt {

using json = nlohmann::json;

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where);
double get_num(const json& j, const char* key, const std::string& where);
double get_num(const json& j, const char* key, double fallback, const std::string& where);
int get_int(const json& j, const char* key, const std::string& where);
int get_int(const json& j, const char* key, int fallback, const std::string& where);
std::string get_str(const json& j, const char* key, const std::string& fallback, const std::string& where);
Vec get_vec(const json& j, const char* key, const std::string& where);
Mat get_mat(const json& j, const char* key, const std::string& where);

}  // namespace spt
