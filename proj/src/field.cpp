#include "copnet/field.hpp"

#include <algorithm>

namespace copnet {

void check_dims(int width, int height) {
    if (width < 1 || height < 1)
        throw std::invalid_argument("raster dimensions must be >= 1, got " +
                                    std::to_string(width) + "x" + std::to_string(height));
}

void check_same_dims(int w1, int h1, int w2, int h2, const char* what) {
    if (w1 != w2 || h1 != h2)
        throw std::invalid_argument(std::string(what) + ": dimension mismatch, " +
                                    std::to_string(w1) + "x" + std::to_string(h1) + " vs " +
                                    std::to_string(w2) + "x" + std::to_string(h2));
}

Field2D::Field2D(int w, int h, double spacing_um, double fill, FieldRole r)
    : width(w), height(h), spacing(spacing_um), role(r) {
    check_dims(w, h);
    if (!(spacing_um > 0.0))
        throw std::invalid_argument("pixel spacing must be > 0");
    values.assign(std::size_t(w) * h, fill);
}

BinaryMask::BinaryMask(int w, int h, std::uint8_t fill) : width(w), height(h) {
    check_dims(w, h);
    bits.assign(std::size_t(w) * h, fill ? std::uint8_t(1) : std::uint8_t(0));
}

std::size_t BinaryMask::foreground_count() const {
    return std::size_t(std::count(bits.begin(), bits.end(), std::uint8_t(1)));
}

LabelMap::LabelMap(int w, int h, std::uint32_t fill) : width(w), height(h) {
    check_dims(w, h);
    labels.assign(std::size_t(w) * h, fill);
}

std::uint32_t LabelMap::max_label() const {
    std::uint32_t m = 0;
    for (std::uint32_t v : labels) m = std::max(m, v);
    return m;
}

void validate_probability(const Field2D& f, const char* what) {
    for (double v : f.values)
        if (!(v >= 0.0 && v <= 1.0))
            throw std::invalid_argument(std::string(what) +
                                        ": expected a probability map with values in [0, 1]");
}

Field2D to_field(const BinaryMask& mask, double spacing_um) {
    Field2D f(mask.width, mask.height, spacing_um, 0.0, FieldRole::probability);
    for (std::size_t i = 0; i < mask.bits.size(); ++i)
        f.values[i] = mask.bits[i] ? 1.0 : 0.0;
    return f;
}

Field2D clamp01(Field2D f) {
    for (double& v : f.values) v = std::clamp(v, 0.0, 1.0);
    f.role = FieldRole::probability;
    return f;
}

}  // namespace copnet
