#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace asd {

struct Segment {
    std::string name;
    std::vector<std::size_t> shape;
    std::size_t offset = 0;

    std::size_t size() const;
};

// Flat parameter storage with a named layout. Whole-model finite differencing
// and checkpointing operate on `values` directly.
class ParamVector {
public:
    ParamVector() = default;

    // Appends a zero-filled segment and returns its offset.
    std::size_t add_segment(std::string name, std::vector<std::size_t> shape);

    std::size_t size() const { return values_.size(); }
    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }
    const std::vector<Segment>& layout() const { return layout_; }

    const Segment& segment(std::string_view name) const;
    std::span<double> view(std::string_view name);
    std::span<const double> view(std::string_view name) const;

    // Same layout, zero values.
    ParamVector zeros_like() const;
    bool same_layout(const ParamVector& other) const;

    // Throws NumericError on a non-finite entry, ConfigError on a broken layout.
    void validate() const;

    // Rebuilds from a layout table and a payload (checkpoint loading).
    static ParamVector from_parts(std::vector<Segment> layout, std::vector<double> values);

private:
    std::vector<Segment> layout_;
    std::vector<double> values_;
};

}  // namespace asd
