#include <algorithm>
#include <fstream>
#include <numbers>
#include <sstream>
#include <vector>

#include "deepboard/client.hpp"
#include "deepboard/errors.hpp"

namespace deepboard {
namespace {

std::string read_text(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

/// Calls `fn(keyword, rest, line_no)` for every non-blank line with comments removed.
template <typename Fn>
void for_each_line(const std::string& text, Fn&& fn) {
    std::istringstream in(text);
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
        ++no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::istringstream parts(line);
        std::string keyword;
        if (!(parts >> keyword)) continue;
        fn(keyword, parts, no);
    }
}

[[noreturn]] void bad_line(int no, const std::string& why) {
    throw InvalidArgument("line " + std::to_string(no) + ": " + why);
}

Vec3 read_vec(std::istringstream& in, int no, const char* what) {
    Vec3 v;
    if (!(in >> v.x >> v.y >> v.z)) bad_line(no, std::string("expected three numbers for ") + what);
    return v;
}

void expect_end(std::istringstream& in, int no) {
    std::string extra;
    if (in >> extra) bad_line(no, "unexpected '" + extra + "'");
}

}  // namespace

void SceneDescription::validate() const {
    for (const auto& b : billboards)
        if (b.half_extents && !(b.half_extents->x > 0 && b.half_extents->y > 0 && b.half_extents->z > 0))
            throw InvalidArgument("billboard half extents must be positive");
    if (!(light_dir.y < -1e-3)) throw LightParallelToGround("scene light must point down");
    for (float c : {background.r, background.g, background.b, background.a})
        if (!(c >= 0 && c <= 1)) throw InvalidArgument("background channels must be in [0,1]");
}

SceneDescription parse_scene(const std::string& text) {
    SceneDescription s;
    for_each_line(text, [&](const std::string& kw, std::istringstream& in, int no) {
        if (kw == "background") {
            if (!(in >> s.background.r >> s.background.g >> s.background.b >> s.background.a))
                bad_line(no, "expected r g b a");
        } else if (kw == "ground_y") {
            if (!(in >> s.ground_y)) bad_line(no, "expected a number");
        } else if (kw == "light") {
            s.light_dir = normalize(read_vec(in, no, "light"));
        } else if (kw == "shadows") {
            std::string v;
            in >> v;
            if (v != "on" && v != "off") bad_line(no, "shadows takes on or off");
            s.shadows = v == "on";
        } else if (kw == "billboard") {
            SceneBillboard b;
            if (!(in >> b.object_id)) bad_line(no, "expected an object id");
            b.center = read_vec(in, no, "center");
            std::vector<std::string> rest;
            for (std::string tok; in >> tok;) rest.push_back(tok);
            if (!rest.empty()) {
                std::istringstream h(rest.size() == 3 ? rest[0] + ' ' + rest[1] + ' ' + rest[2] : "");
                b.half_extents = read_vec(h, no, "half extents");
                expect_end(h, no);
            }
            s.billboards.push_back(b);
        } else {
            bad_line(no, "unknown keyword '" + kw + "'");
        }
        expect_end(in, no);
    });
    s.validate();
    return s;
}

SceneDescription load_scene(const std::string& path) { return parse_scene(read_text(path)); }

void TrajectoryScript::validate() const {
    if (keys.empty()) throw InvalidArgument("trajectory script has no poses");
    for (size_t i = 1; i < keys.size(); ++i)
        if (!(keys[i].time_s > keys[i - 1].time_s))
            throw InvalidArgument("trajectory times must strictly increase");
}

Pose TrajectoryScript::pose_at(double time_s) const {
    validate();
    if (time_s <= keys.front().time_s) return keys.front().pose;
    if (time_s >= keys.back().time_s) return keys.back().pose;
    const auto next = std::upper_bound(keys.begin(), keys.end(), time_s,
                                       [](double t, const Keyframe& k) { return t < k.time_s; });
    const Keyframe& a = *(next - 1);
    const Keyframe& b = *next;
    const double f = (time_s - a.time_s) / (b.time_s - a.time_s);
    return {a.pose.position + (b.pose.position - a.pose.position) * f,
            slerp(a.pose.orientation, b.pose.orientation, f)};
}

TrajectoryScript TrajectoryScript::orbit(int count, double radius, double height, const Vec3& target,
                                         double dt) {
    if (count < 1) throw InvalidArgument("orbit needs at least one pose");
    TrajectoryScript s;
    for (int i = 0; i < count; ++i) {
        const double a = 2 * std::numbers::pi * i / count;
        const Vec3 eye = target + Vec3{radius * std::sin(a), height, radius * std::cos(a)};
        s.keys.push_back({i * dt, Pose::look_at(eye, target)});
    }
    return s;
}

TrajectoryScript parse_script(const std::string& text) {
    TrajectoryScript s;
    for_each_line(text, [&](const std::string& kw, std::istringstream& in, int no) {
        if (kw != "pose") bad_line(no, "unknown keyword '" + kw + "'");
        Keyframe k;
        if (!(in >> k.time_s)) bad_line(no, "expected a time");
        const Vec3 eye = read_vec(in, no, "position");
        std::string mode;
        in >> mode;
        if (mode == "look") {
            k.pose = Pose::look_at(eye, read_vec(in, no, "look target"));
        } else if (mode == "quat") {
            Quat q;
            if (!(in >> q.w >> q.x >> q.y >> q.z)) bad_line(no, "expected w x y z");
            if (q.norm() < 1e-12) bad_line(no, "zero quaternion");
            k.pose = {eye, q.normalized()};
        } else {
            bad_line(no, "expected 'look' or 'quat'");
        }
        expect_end(in, no);
        s.keys.push_back(k);
    });
    s.validate();
    return s;
}

TrajectoryScript load_script(const std::string& path) { return parse_script(read_text(path)); }

}  // namespace deepboard
