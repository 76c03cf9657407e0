#include "copnet/copf_io.hpp"

#include <cstring>
#include <fstream>

namespace copnet {

namespace {

constexpr char kMagic[4] = {'C', 'O', 'P', 'F'};
constexpr std::uint8_t kVersion = 1;
constexpr std::uint32_t kMaxDim = 1u << 20;

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
    throw std::runtime_error("COPF " + path.string() + ": " + what);
}

std::uint32_t read_u32_le(const unsigned char* p) {
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
           (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}

float read_f32_le(const unsigned char* p) {
    const std::uint32_t bits = read_u32_le(p);
    float f;
    std::memcpy(&f, &bits, sizeof f);
    return f;
}

void put_u32_le(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xFF));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xFF));
    out.push_back(static_cast<unsigned char>((v >> 16) & 0xFF));
    out.push_back(static_cast<unsigned char>((v >> 24) & 0xFF));
}

void put_f32_le(std::vector<unsigned char>& out, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, sizeof bits);
    put_u32_le(out, bits);
}

}  // namespace

Field2D read_copf(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open for reading");

    unsigned char header[17];
    in.read(reinterpret_cast<char*>(header), sizeof header);
    if (std::size_t(in.gcount()) != sizeof header) fail(path, "truncated header");
    if (std::memcmp(header, kMagic, 4) != 0) fail(path, "bad magic");
    if (header[4] != kVersion)
        fail(path, "unsupported version " + std::to_string(int(header[4])));

    const std::uint32_t width = read_u32_le(header + 5);
    const std::uint32_t height = read_u32_le(header + 9);
    const float spacing = read_f32_le(header + 13);
    if (width == 0 || height == 0) fail(path, "malformed header: zero dimension");
    if (width > kMaxDim || height > kMaxDim) fail(path, "dimension overflow");
    if (!(spacing > 0.0f)) fail(path, "malformed header: non-positive spacing");

    const std::size_t n = std::size_t(width) * height;
    std::vector<unsigned char> payload(n * 4);
    in.read(reinterpret_cast<char*>(payload.data()), std::streamsize(payload.size()));
    if (std::size_t(in.gcount()) != payload.size()) fail(path, "payload size mismatch");
    if (in.peek() != EOF) fail(path, "payload size mismatch: trailing bytes");

    Field2D field{int(width), int(height), double(spacing)};
    for (std::size_t i = 0; i < n; ++i)
        field.values[i] = double(read_f32_le(payload.data() + 4 * i));
    return field;
}

void write_copf(const Field2D& field, const std::filesystem::path& path) {
    if (field.width < 1 || field.height < 1)
        throw std::invalid_argument("COPF " + path.string() + ": empty field");
    if (std::uint64_t(field.width) > kMaxDim || std::uint64_t(field.height) > kMaxDim)
        throw std::invalid_argument("COPF " + path.string() + ": dimension overflow");

    std::vector<unsigned char> bytes;
    bytes.reserve(17 + field.pixel_count() * 4);
    bytes.insert(bytes.end(), kMagic, kMagic + 4);
    bytes.push_back(kVersion);
    put_u32_le(bytes, std::uint32_t(field.width));
    put_u32_le(bytes, std::uint32_t(field.height));
    put_f32_le(bytes, float(field.spacing));
    for (double v : field.values) put_f32_le(bytes, float(v));

    std::ofstream out(path, std::ios::binary);
    if (!out) fail(path, "cannot open for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) fail(path, "write failed");
}

}  // namespace copnet
