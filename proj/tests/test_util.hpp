#pragma once

#include <filesystem>
#include <string>

#include <unistd.h>

#include "copnet/field.hpp"
#include "copnet/rng.hpp"

namespace testutil {

inline copnet::BinaryMask random_mask(int w, int h, double density, copnet::Rng& rng) {
    copnet::BinaryMask m(w, h);
    for (auto& b : m.bits) b = rng.next_double() < density ? 1 : 0;
    return m;
}

inline copnet::Field2D random_field(int w, int h, double spacing, copnet::Rng& rng,
                                    double lo = 0.0, double hi = 1.0) {
    copnet::Field2D f(w, h, spacing);
    for (auto& v : f.values) v = rng.uniform(lo, hi);
    return f;
}

// Unique scratch directory under the build tree, removed on destruction.
struct ScratchDir {
    std::filesystem::path path;

    explicit ScratchDir(const std::string& tag) {
        static std::uint64_t counter = 0;
        path = std::filesystem::temp_directory_path() /
               ("copnet-test-" + tag + "-" + std::to_string(++counter) + "-" +
                std::to_string(std::uint64_t(::getpid())));
        std::filesystem::create_directories(path);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
};

}  // namespace testutil
