#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "rlfuzz/bytes.hpp"
#include "rlfuzz/nn.hpp"

namespace rlfuzz::nn {

struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Self-describing model container: a kind tag, string metadata (config echo,
// vocabulary hash, training counters) and named flat parameter arrays.
struct Checkpoint {
    std::string kind;  // "tcn" or "ddqn"
    std::map<std::string, std::string> meta;
    struct Array {
        std::string name;
        std::vector<int> shape;
        std::vector<double> data;
    };
    std::vector<Array> arrays;

    Bytes serialize() const;
    static Checkpoint deserialize(const Bytes& data);

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);

    void put_params(const ParamSet& params);
    // restores values into an already-built ParamSet; shapes must match
    void restore_params(ParamSet& params) const;
};

}  // namespace rlfuzz::nn
