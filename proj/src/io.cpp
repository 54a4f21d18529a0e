#include "palpation/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "palpation/errors.hpp"

namespace palpation::io {

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

void write_text(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out)
        throw IoError("failed writing " + path.string());
}

void require_known_keys(const json& object, std::initializer_list<std::string_view> allowed,
                        std::string_view context) {
    if (!object.is_object())
        throw ConfigError(std::string(context) + ": expected a JSON object");
    for (const auto& item : object.items())
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
            throw ConfigError(std::string(context) + ": unknown key '" + item.key() + "'");
}

std::string format_double(double v) {
    if (std::isnan(v))
        return "nan";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

std::string encode_pgm(std::span<const double> values, std::size_t width, std::size_t height) {
    if (values.size() != width * height)
        throw InvalidInput("encode_pgm: value count does not match width x height");
    double lo = 0.0;
    double hi = 0.0;
    if (!values.empty()) {
        const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
        lo = *mn;
        hi = *mx;
    }
    std::ostringstream out;
    out << "P5\n" << width << ' ' << height << "\n255\n";
    std::string pixels(values.size(), '\0');
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double scaled = hi > lo ? (values[i] - lo) / (hi - lo) * 255.0 : 0.0;
        pixels[i] = static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(scaled, 0.0, 255.0))));
    }
    out << pixels;
    return out.str();
}

json transform_to_json(const RigidTransform& t) {
    const PoseParams p = t.params();
    json rows = json::array();
    for (int r = 0; r < 3; ++r)
        rows.push_back({t.rotation()(r, 0), t.rotation()(r, 1), t.rotation()(r, 2)});
    return json{{"translation_mm", {p.tx, p.ty, p.tz}},
                {"rotation_deg", {p.rx_deg, p.ry_deg, p.rz_deg}},
                {"rotation_matrix", rows}};
}

}  // namespace palpation::io
