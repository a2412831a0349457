#pragma once

#include <unistd.h>

#include <filesystem>
#include <string>

// Unique scratch directory per test, removed on destruction.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("talkstab_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string str(const std::string& rel = "") const {
        return rel.empty() ? path.string() : (path / rel).string();
    }

private:
    static int& counter() {
        static int c = 0;
        return c;
    }
};
