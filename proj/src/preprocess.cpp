#include "copnet/preprocess.hpp"

#include <algorithm>
#include <cmath>

namespace copnet {

Field2D zscore_slice(const Field2D& field) {
    if (field.pixel_count() == 0)
        throw std::invalid_argument("zscore_slice: empty field");

    const bool constant = std::all_of(field.values.begin(), field.values.end(),
                                      [&](double v) { return v == field.values[0]; });
    Field2D out(field.width, field.height, field.spacing);
    if (constant) return out;

    const double n = double(field.pixel_count());
    double sum = 0.0;
    for (double v : field.values) sum += v;
    const double mean = sum / n;
    double ss = 0.0;
    for (double v : field.values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / n);

    for (std::size_t i = 0; i < field.values.size(); ++i)
        out.values[i] = (field.values[i] - mean) / sd;
    return out;
}

namespace {

// Corner-aligned source coordinate for output index i.
double src_coord(int i, int n_out, int n_in) {
    if (n_out == 1 || n_in == 1) return 0.0;
    return double(i) * double(n_in - 1) / double(n_out - 1);
}

int nearest_index(int i, int n_out, int n_in) {
    const int idx = int(std::llround(src_coord(i, n_out, n_in)));
    return std::clamp(idx, 0, n_in - 1);
}

double rescaled_spacing(double spacing, int w_in, int w_out) {
    return spacing * double(w_in) / double(w_out);
}

}  // namespace

Field2D resize(const Field2D& field, int target_w, int target_h, ResizeMode mode) {
    check_dims(target_w, target_h);
    Field2D out(target_w, target_h, rescaled_spacing(field.spacing, field.width, target_w),
                0.0, field.role);

    if (mode == ResizeMode::nearest) {
        for (int y = 0; y < target_h; ++y) {
            const int sy = nearest_index(y, target_h, field.height);
            for (int x = 0; x < target_w; ++x)
                out.at(x, y) = field.at(nearest_index(x, target_w, field.width), sy);
        }
        return out;
    }

    for (int y = 0; y < target_h; ++y) {
        const double fy = src_coord(y, target_h, field.height);
        const int y0 = std::min(int(fy), field.height - 1);
        const int y1 = std::min(y0 + 1, field.height - 1);
        const double wy = fy - y0;
        for (int x = 0; x < target_w; ++x) {
            const double fx = src_coord(x, target_w, field.width);
            const int x0 = std::min(int(fx), field.width - 1);
            const int x1 = std::min(x0 + 1, field.width - 1);
            const double wx = fx - x0;
            const double top = (1.0 - wx) * field.at(x0, y0) + wx * field.at(x1, y0);
            const double bot = (1.0 - wx) * field.at(x0, y1) + wx * field.at(x1, y1);
            out.at(x, y) = (1.0 - wy) * top + wy * bot;
        }
    }
    return out;
}

BinaryMask resize(const BinaryMask& mask, int target_w, int target_h, ResizeMode mode) {
    if (mode != ResizeMode::nearest)
        throw std::invalid_argument("resize: only nearest mode is valid for masks");
    check_dims(target_w, target_h);
    BinaryMask out(target_w, target_h);
    for (int y = 0; y < target_h; ++y) {
        const int sy = nearest_index(y, target_h, mask.height);
        for (int x = 0; x < target_w; ++x)
            out.at(x, y) = mask.at(nearest_index(x, target_w, mask.width), sy);
    }
    return out;
}

LabelMap resize(const LabelMap& labels, int target_w, int target_h, ResizeMode mode) {
    if (mode != ResizeMode::nearest)
        throw std::invalid_argument("resize: only nearest mode is valid for label maps");
    check_dims(target_w, target_h);
    LabelMap out(target_w, target_h);
    for (int y = 0; y < target_h; ++y) {
        const int sy = nearest_index(y, target_h, labels.height);
        for (int x = 0; x < target_w; ++x)
            out.at(x, y) = labels.at(nearest_index(x, target_w, labels.width), sy);
    }
    return out;
}

BinaryMask binarize(const Field2D& field, double theta) {
    if (!(theta >= 0.0 && theta <= 1.0))
        throw std::invalid_argument("binarize: threshold must lie in [0, 1]");
    BinaryMask out(field.width, field.height);
    for (std::size_t i = 0; i < field.values.size(); ++i)
        out.bits[i] = field.values[i] >= theta ? 1 : 0;
    return out;
}

}  // namespace copnet
