#pragma once

#include "meaeq/backends.hpp"
#include "meaeq/error.hpp"
#include "meaeq/random.hpp"

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

namespace testing {

// Runs `body` and reports the ErrorCode it threw, or nullopt.
template <class F>
std::optional<meaeq::ErrorCode> error_code_of(F&& body) {
    try {
        body();
    } catch (const meaeq::Error& e) {
        return e.code();
    }
    return std::nullopt;
}

inline std::vector<meaeq::Embedding> gaussian_points(std::size_t n, std::size_t d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<meaeq::Embedding> out(n);
    for (auto& e : out) {
        e.values.resize(d);
        for (auto& v : e.values) v = static_cast<float>(normal(rng));
    }
    return out;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("meaeq-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

} // namespace testing
