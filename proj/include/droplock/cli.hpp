#pragma once

#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace droplock::cli {

enum ExitCode : int {
    kOk = 0,
    kReplayMismatch = 1,
    kConfigError = 2,
    kDegenerate = 3,
    kIoError = 4,
};

// Record of one command invocation; rerunning `argv` reproduces the outputs
// byte for byte.
struct RunManifest {
    std::string command;
    std::vector<std::string> argv;  // arguments after the program name
    std::map<std::string, std::string> config;
    std::uint64_t seed = 0;
    std::string version;
    std::map<std::string, std::string> output_digests;  // path -> sha256 hex
};

std::string sha256_hex(const std::string& bytes);
// Throws std::ios_base::failure if the file cannot be read.
std::string sha256_file(const std::string& path);

std::string to_json(const RunManifest& m);
RunManifest manifest_from_json(const std::string& text);
void write_manifest(const std::string& path, const RunManifest& m);
RunManifest read_manifest(const std::string& path);

std::string version();

// Entry point shared by the executable and the tests. args excludes the
// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace droplock::cli
