#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace rlfuzz {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat "key = value" config file. Lines starting with '#' are comments.
// Writers echo every default so a dumped file is a complete record of a run.
class KvConfig {
public:
    KvConfig() = default;

    static KvConfig parse(const std::string& text);
    static KvConfig load(const std::string& path);

    void set(const std::string& key, const std::string& value) { kv_[key] = value; }
    void set_int(const std::string& key, long long v) { kv_[key] = std::to_string(v); }
    void set_double(const std::string& key, double v);
    void set_int_list(const std::string& key, const std::vector<int>& v);

    bool has(const std::string& key) const { return kv_.count(key) != 0; }

    const std::string& get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& dflt) const;
    long long get_int(const std::string& key) const;
    long long get_int_or(const std::string& key, long long dflt) const;
    double get_double(const std::string& key) const;
    double get_double_or(const std::string& key, double dflt) const;
    std::vector<int> get_int_list(const std::string& key) const;

    // keys present in the file but never read; used to reject unknown keys
    std::vector<std::string> unknown_keys(const std::vector<std::string>& known) const;

    std::string dump() const;
    void save(const std::string& path) const;

    const std::map<std::string, std::string>& entries() const { return kv_; }

private:
    std::map<std::string, std::string> kv_;
};

}  // namespace rlfuzz
