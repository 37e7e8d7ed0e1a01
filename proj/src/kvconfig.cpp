#include "rlfuzz/kvconfig.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace rlfuzz {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

KvConfig KvConfig::parse(const std::string& text) {
    KvConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        cfg.kv_[key] = value;
    }
    return cfg;
}

KvConfig KvConfig::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
}

void KvConfig::set_double(const std::string& key, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    kv_[key] = buf;
}

void KvConfig::set_int_list(const std::string& key, const std::vector<int>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(v[i]);
    }
    kv_[key] = s;
}

const std::string& KvConfig::get(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw ConfigError("missing config key: " + key);
    return it->second;
}

std::string KvConfig::get_or(const std::string& key, const std::string& dflt) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? dflt : it->second;
}

long long KvConfig::get_int(const std::string& key) const {
    const std::string& v = get(key);
    try {
        size_t pos = 0;
        long long r = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": not an integer: " + v);
    }
}

long long KvConfig::get_int_or(const std::string& key, long long dflt) const {
    return has(key) ? get_int(key) : dflt;
}

double KvConfig::get_double(const std::string& key) const {
    const std::string& v = get(key);
    try {
        size_t pos = 0;
        double r = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": not a number: " + v);
    }
}

double KvConfig::get_double_or(const std::string& key, double dflt) const {
    return has(key) ? get_double(key) : dflt;
}

std::vector<int> KvConfig::get_int_list(const std::string& key) const {
    const std::string& v = get(key);
    std::vector<int> out;
    std::string cur;
    for (char c : v + ",") {
        if (c == ',') {
            std::string t = trim(cur);
            if (!t.empty()) {
                try {
                    out.push_back(std::stoi(t));
                } catch (const std::exception&) {
                    throw ConfigError("config key " + key + ": not an integer list: " + v);
                }
            }
            cur.clear();
        } else {
            cur += c;
        }
    }
    return out;
}

std::vector<std::string> KvConfig::unknown_keys(const std::vector<std::string>& known) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : kv_)
        if (std::find(known.begin(), known.end(), k) == known.end()) out.push_back(k);
    return out;
}

std::string KvConfig::dump() const {
    std::string s;
    for (const auto& [k, v] : kv_) s += k + " = " + v + "\n";
    return s;
}

void KvConfig::save(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write config file: " + path);
    f << dump();
}

}  // namespace rlfuzz
