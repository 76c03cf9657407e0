#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace copnet {

enum class FieldRole { generic, probability };

// Real-valued 2D raster with isotropic physical pixel spacing (um/px).
// Values are stored row-major; pixel (x, y) has its center at physical
// coordinates ((x + 0.5) * spacing, (y + 0.5) * spacing).
struct Field2D {
    int width = 0;
    int height = 0;
    double spacing = 1.0;
    FieldRole role = FieldRole::generic;
    std::vector<double> values;

    Field2D() = default;
    Field2D(int w, int h, double spacing_um, double fill = 0.0,
            FieldRole r = FieldRole::generic);

    double& at(int x, int y) { return values[std::size_t(y) * width + x]; }
    double at(int x, int y) const { return values[std::size_t(y) * width + x]; }
    std::size_t pixel_count() const { return values.size(); }

    double domain_width_um() const { return width * spacing; }
    double domain_height_um() const { return height * spacing; }
};

struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    BinaryMask() = default;
    BinaryMask(int w, int h, std::uint8_t fill = 0);

    std::uint8_t& at(int x, int y) { return bits[std::size_t(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return bits[std::size_t(y) * width + x]; }
    std::size_t pixel_count() const { return bits.size(); }
    std::size_t foreground_count() const;
};

// Instance labelling; label 0 is reserved for contour/background.
struct LabelMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint32_t> labels;

    LabelMap() = default;
    LabelMap(int w, int h, std::uint32_t fill = 0);

    std::uint32_t& at(int x, int y) { return labels[std::size_t(y) * width + x]; }
    std::uint32_t at(int x, int y) const { return labels[std::size_t(y) * width + x]; }
    std::size_t pixel_count() const { return labels.size(); }
    std::uint32_t max_label() const;
};

void check_dims(int width, int height);
void check_same_dims(int w1, int h1, int w2, int h2, const char* what);

template <typename A, typename B>
void check_same_dims(const A& a, const B& b, const char* what) {
    check_same_dims(a.width, a.height, b.width, b.height, what);
}

// Throws std::invalid_argument unless every value lies in [0, 1].
void validate_probability(const Field2D& f, const char* what);

// Lifts a 0/1 mask to a probability field.
Field2D to_field(const BinaryMask& mask, double spacing_um);

Field2D clamp01(Field2D f);

}  // namespace copnet
