#pragma once

#include <map>
#include <string>

#include "droplock/types.hpp"

namespace droplock {

// Flat `key = value` documents with `#` comments. Reals are written in the
// shortest form that parses back to the identical double.
using KeyValueMap = std::map<std::string, std::string>;

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

KeyValueMap parse_key_values(const std::string& text);
std::string format_key_values(const KeyValueMap& kv);

std::string format_double(double v);
double parse_double(const std::string& s);
std::uint64_t parse_u64(const std::string& s);

KeyValueMap to_key_values(const ExperimentConfig& config);
// Unknown keys are rejected; missing keys keep their defaults.
ExperimentConfig config_from_key_values(const KeyValueMap& kv);

std::string serialize(const ExperimentConfig& config);
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

}  // namespace droplock
