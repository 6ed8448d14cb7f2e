#pragma once

#include <filesystem>
#include <random>
#include <string>

/// A fresh directory under the system temp path, removed on destruction.
class ScratchDir {
public:
    ScratchDir() {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("herd-test-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string str() const { return path_.string(); }

private:
    std::filesystem::path path_;
};

inline const char* kBaseConfig = R"({
  "market": {"r": 0.04, "mu": 0.07, "sigma": 0.17},
  "follower": {"alpha": 0.2, "x0": 0},
  "leader": {"alpha": 0.4, "x0": 0},
  "T": 50,
  "herd": {"vartheta": 0.0025, "rho": 0}
})";
