#include "asd/param_vector.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "asd/error.hpp"

namespace asd {

std::size_t Segment::size() const {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::size_t ParamVector::add_segment(std::string name, std::vector<std::size_t> shape) {
    for (const auto& s : layout_) {
        if (s.name == name) throw ConfigError("duplicate parameter segment '" + name + "'");
    }
    Segment seg{std::move(name), std::move(shape), values_.size()};
    values_.resize(values_.size() + seg.size(), 0.0);
    layout_.push_back(std::move(seg));
    return layout_.back().offset;
}

const Segment& ParamVector::segment(std::string_view name) const {
    for (const auto& s : layout_) {
        if (s.name == name) return s;
    }
    throw ConfigError("no parameter segment named '" + std::string(name) + "'");
}

std::span<double> ParamVector::view(std::string_view name) {
    const Segment& s = segment(name);
    return std::span<double>(values_).subspan(s.offset, s.size());
}

std::span<const double> ParamVector::view(std::string_view name) const {
    const Segment& s = segment(name);
    return std::span<const double>(values_).subspan(s.offset, s.size());
}

ParamVector ParamVector::zeros_like() const {
    ParamVector out;
    out.layout_ = layout_;
    out.values_.assign(values_.size(), 0.0);
    return out;
}

bool ParamVector::same_layout(const ParamVector& other) const {
    if (layout_.size() != other.layout_.size() || values_.size() != other.values_.size()) return false;
    for (std::size_t i = 0; i < layout_.size(); ++i) {
        if (layout_[i].name != other.layout_[i].name || layout_[i].shape != other.layout_[i].shape ||
            layout_[i].offset != other.layout_[i].offset) {
            return false;
        }
    }
    return true;
}

void ParamVector::validate() const {
    std::size_t expected = 0;
    for (const auto& s : layout_) {
        if (s.offset != expected) throw ConfigError("parameter layout has a gap at '" + s.name + "'");
        expected += s.size();
    }
    if (expected != values_.size()) {
        throw ConfigError("parameter layout covers " + std::to_string(expected) + " values, payload has " +
                          std::to_string(values_.size()));
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            std::ostringstream msg;
            msg << "non-finite parameter at index " << i << ": " << values_[i];
            throw NumericError(msg.str());
        }
    }
}

ParamVector ParamVector::from_parts(std::vector<Segment> layout, std::vector<double> values) {
    ParamVector out;
    out.layout_ = std::move(layout);
    out.values_ = std::move(values);
    out.validate();
    return out;
}

}  // namespace asd
