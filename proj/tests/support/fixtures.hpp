#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "deepboard/assets.hpp"

namespace deepboard::test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& stem) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / (stem + "_" + std::to_string(rd()));
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
    std::string str() const { return path_.string(); }

private:
    std::filesystem::path path_;
};

/// Writes `<dir>/<file>` holding the generated scene as a dense asset.
inline void write_scene(const std::filesystem::path& dir, const std::string& file, SceneName name,
                        std::uint32_t resolution = 16) {
    save_asset((dir / file).string(), Asset{generate_scene({name, resolution})});
}

}  // namespace deepboard::test
