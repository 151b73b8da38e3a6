#include "stpp/io/json.hpp"

#include <algorithm>
#include <fstream>

#include "stpp/error.hpp"

namespace stpp::io {

json box_to_json(const core::Box& b) { return json::array({b.x0, b.y0, b.x1, b.y1}); }

core::Box box_from_json(const json& j) {
    if (!j.is_array() || j.size() != 4) throw ConfigError("box must be [x0,y0,x1,y1]");
    try {
        return core::Box{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                         j[3].get<double>()};
    } catch (const json::exception& e) {
        throw ConfigError(std::string("box: ") + e.what());
    }
}

json region_to_json(const core::RegionUnion& r) {
    json boxes = json::array();
    for (const auto& b : r.boxes()) boxes.push_back(box_to_json(b));
    json excluded = json::array();
    for (const auto& p : r.excluded()) excluded.push_back(json::array({p.x, p.y}));
    return json{{"boxes", boxes}, {"excluded", excluded}};
}

core::RegionUnion region_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("region must be an object");
    reject_unknown_keys(j, {"boxes", "excluded"}, "region");
    core::RegionUnion r;
    if (j.contains("boxes")) {
        for (const auto& b : j.at("boxes")) r.add_box(box_from_json(b));
    }
    if (j.contains("excluded")) {
        for (const auto& p : j.at("excluded")) {
            if (!p.is_array() || p.size() != 2) throw ConfigError("excluded point must be [x,y]");
            r.add_excluded(core::Point{p[0].get<double>(), p[1].get<double>()});
        }
    }
    return r;
}

json domain_to_json(const core::Domain& d) {
    return json{{"t_end", d.t_end}, {"s_bounds", box_to_json(d.s_bounds)}};
}

core::Domain domain_from_json(const json& j) {
    reject_unknown_keys(j, {"t_end", "s_bounds"}, "domain");
    core::Domain d;
    if (j.contains("t_end")) d.t_end = j.at("t_end").get<double>();
    if (j.contains("s_bounds")) d.s_bounds = box_from_json(j.at("s_bounds"));
    d.validate();
    return d;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    out << j.dump(2) << '\n';
}

void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed,
                         const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, value] : j.items()) {
        const bool ok = std::any_of(allowed.begin(), allowed.end(),
                                    [&](const char* a) { return key == a; });
        if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

}  // namespace stpp::io
