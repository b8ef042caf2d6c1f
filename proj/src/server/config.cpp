#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "deepboard/errors.hpp"
#include "deepboard/server.hpp"

namespace deepboard {
namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const char* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc{} || ptr != end)
        throw InvalidArgument("config key '" + key + "': not a number: '" + value + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "on") return true;
    if (value == "false" || value == "0" || value == "off") return false;
    throw InvalidArgument("config key '" + key + "': expected true/false, got '" + value + "'");
}

}  // namespace

void ServerConfig::validate() const {
    if (max_sessions < 1) throw InvalidArgument("max_sessions must be >= 1");
    if (asset_dir.empty()) throw InvalidArgument("asset_dir is empty");
    settings.validate();
}

ServerConfig parse_server_config(const std::string& text) {
    ServerConfig c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidArgument("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));

        if (key == "address") c.address = value;
        else if (key == "port") c.port = parse_number<std::uint16_t>(key, value);
        else if (key == "asset_dir") c.asset_dir = value;
        else if (key == "max_sessions") c.max_sessions = parse_number<int>(key, value);
        else if (key == "step_size") c.settings.step_size = parse_number<double>(key, value);
        else if (key == "early_stop") c.settings.early_stop_transmittance = parse_number<double>(key, value);
        else if (key == "png_threshold") c.png_threshold = parse_number<size_t>(key, value);
        else if (key == "metrics") c.metrics = parse_bool(key, value);
        else if (key == "viewer_dir") c.viewer_dir = value;
        else if (key == "background") {
            std::istringstream parts(value);
            float rgba[4];
            for (float& v : rgba)
                if (!(parts >> v)) throw InvalidArgument("config key 'background': expected 4 numbers");
            c.settings.background = {rgba[0], rgba[1], rgba[2], rgba[3]};
        } else {
            throw InvalidArgument("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }
    c.validate();
    return c;
}

void apply_environment(ServerConfig& config) {
    if (const char* dir = std::getenv("DEEPBOARD_ASSET_DIR"); dir && *dir) config.asset_dir = dir;
}

ServerConfig load_server_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config file " + path);
    std::stringstream text;
    text << f.rdbuf();
    ServerConfig c = parse_server_config(text.str());
    apply_environment(c);
    return c;
}

}  // namespace deepboard
