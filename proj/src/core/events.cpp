#include "stpp/core/events.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "stpp/error.hpp"

namespace stpp::core {

void Domain::validate() const {
    if (!(t_end > 0.0)) throw ConfigError("domain: t_end must be positive");
    if (!(s_bounds.x1 > s_bounds.x0) || !(s_bounds.y1 > s_bounds.y0))
        throw ConfigError("domain: spatial bounds must satisfy U > L");
}

EventStream::EventStream(std::vector<Event> events) : events_(std::move(events)) {
    for (std::size_t i = 0; i < events_.size(); ++i) {
        if (!std::isfinite(events_[i].t) || !std::isfinite(events_[i].s.x) ||
            !std::isfinite(events_[i].s.y))
            throw ConfigError("event stream: non-finite coordinate at row " + std::to_string(i));
        if (i > 0 && !(events_[i].t > events_[i - 1].t))
            throw ConfigError("event stream: times must be strictly increasing (row " +
                              std::to_string(i) + ")");
    }
}

void EventStream::push_back(const Event& e) {
    if (!events_.empty() && !(e.t > events_.back().t))
        throw ConfigError("event stream: appended time must exceed the last time");
    events_.push_back(e);
}

EventStream EventStream::prefix_before(double t_cut) const {
    auto it = std::lower_bound(events_.begin(), events_.end(), t_cut,
                               [](const Event& e, double t) { return e.t < t; });
    EventStream out;
    out.events_.assign(events_.begin(), it);
    return out;
}

Box neighborhood(const Point& s, double delta, const Domain& domain) {
    const Box ball{s.x - delta, s.y - delta, s.x + delta, s.y + delta};
    const auto& b = domain.s_bounds;
    return Box{std::max(ball.x0, b.x0), std::max(ball.y0, b.y0), std::min(ball.x1, b.x1),
               std::min(ball.y1, b.y1)};
}

TransformedEvent transform_event(const EventStream& stream, std::size_t index,
                                 std::optional<double> delta, const Domain& domain) {
    if (index >= stream.size())
        throw ConfigError("transform_event: index " + std::to_string(index) + " out of range");
    const Event& x = stream[index];
    double t_n = 0.0;
    if (!delta) {
        if (index > 0) t_n = stream[index - 1].t;
    } else {
        const Box ball = neighborhood(x, *delta, domain);
        for (std::size_t j = index; j-- > 0;) {
            if (ball.contains(stream[j].s)) {
                t_n = stream[j].t;
                break;
            }
        }
    }
    return TransformedEvent{x.t - t_n, x.s};
}

EventStream read_events_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("events csv: missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "t,s1,s2") throw ConfigError("events csv: header must be 't,s1,s2'");
    std::vector<Event> events;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        Event e;
        char c1 = 0, c2 = 0;
        if (!(ss >> e.t >> c1 >> e.s.x >> c2 >> e.s.y) || c1 != ',' || c2 != ',')
            throw ConfigError("events csv: malformed row " + std::to_string(row));
        events.push_back(e);
    }
    return EventStream(std::move(events));
}

EventStream read_events_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("events csv: cannot open " + path);
    return read_events_csv(in);
}

void write_events_csv(std::ostream& out, const EventStream& stream) {
    out << "t,s1,s2\n" << std::setprecision(17);
    for (const auto& e : stream) out << e.t << ',' << e.s.x << ',' << e.s.y << '\n';
}

void write_events_csv(const std::string& path, const EventStream& stream) {
    std::ofstream out(path);
    if (!out) throw ConfigError("events csv: cannot write " + path);
    write_events_csv(out, stream);
}

}  // namespace stpp::core
