#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stpp/core/geometry.hpp"

namespace stpp::core {

struct Domain {
    double t_end{1.0};
    Box s_bounds{0.0, 0.0, 1.0, 1.0};

    // Throws ConfigError when t_end <= 0 or the spatial box is degenerate.
    void validate() const;
    [[nodiscard]] double area() const { return s_bounds.area(); }
};

struct Event {
    double t{0.0};
    Point s{};

    friend bool operator==(const Event&, const Event&) = default;
};

// Time-ordered events with strictly increasing timestamps.
class EventStream {
public:
    EventStream() = default;
    // Throws ConfigError on ties or decreasing times.
    explicit EventStream(std::vector<Event> events);

    [[nodiscard]] const std::vector<Event>& events() const { return events_; }
    [[nodiscard]] std::size_t size() const { return events_.size(); }
    [[nodiscard]] bool empty() const { return events_.empty(); }
    [[nodiscard]] const Event& operator[](std::size_t i) const { return events_[i]; }
    [[nodiscard]] auto begin() const { return events_.begin(); }
    [[nodiscard]] auto end() const { return events_.end(); }

    // Appends one event; its time must exceed the last one.
    void push_back(const Event& e);

    // Events with t < t_cut.
    [[nodiscard]] EventStream prefix_before(double t_cut) const;

private:
    std::vector<Event> events_;
};

struct TransformedEvent {
    double dt{0.0};
    Point s{};
};

// (t - t_n, s) for the event at 0-based `index`. With `delta`, t_n is the most
// recent earlier event inside the clipped l-infinity ball of radius delta around
// the event; without it, the most recent earlier event. t_n = 0 when none exists.
[[nodiscard]] TransformedEvent transform_event(const EventStream& stream, std::size_t index,
                                               std::optional<double> delta = std::nullopt,
                                               const Domain& domain = Domain{});

// Clipped l-infinity ball {s' : |s' - s|_inf <= delta} ∩ S.
[[nodiscard]] Box neighborhood(const Point& s, double delta, const Domain& domain);
[[nodiscard]] inline Box neighborhood(const Event& x, double delta, const Domain& domain) {
    return neighborhood(x.s, delta, domain);
}

// CSV with header `t,s1,s2`.
[[nodiscard]] EventStream read_events_csv(std::istream& in);
[[nodiscard]] EventStream read_events_csv(const std::string& path);
void write_events_csv(std::ostream& out, const EventStream& stream);
void write_events_csv(const std::string& path, const EventStream& stream);

}  // namespace stpp::core
