#pragma once

// Helpers for driving the built CLI binary from tests.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace testcli {

inline std::filesystem::path fresh_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() /
               ("trajcurate-" + tag + "-" + std::to_string(::getpid()) + "-" +
                std::to_string(std::rand()));
    std::filesystem::create_directories(dir);
    return dir;
}

/// Run the CLI with the given argument string; returns the exit code.
/// stderr is appended to <dir>/stderr.log, stdout to <dir>/stdout.log.
inline int run_cli(const std::filesystem::path& dir, const std::string& args) {
    const std::string cmd = std::string(TRAJCURATE_BIN) + " " + args + " >>" +
                            (dir / "stdout.log").string() + " 2>>" +
                            (dir / "stderr.log").string();
    const int status = std::system(cmd.c_str());
    if (WIFEXITED(status)) return WEXITSTATUS(status);
    return -1;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace testcli
