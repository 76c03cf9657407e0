#include "copnet/pgm_io.hpp"

#include <cctype>
#include <fstream>

namespace copnet {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
    throw std::runtime_error("PGM " + path.string() + ": " + what);
}

// Reads one whitespace/comment-delimited header token.
std::string next_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(char(c));
    }
    return tok;
}

long parse_header_int(std::istream& in, const std::filesystem::path& path, const char* what) {
    const std::string tok = next_token(in);
    if (tok.empty()) fail(path, std::string("malformed header: missing ") + what);
    long v = 0;
    for (char ch : tok) {
        if (!std::isdigit(static_cast<unsigned char>(ch)))
            fail(path, std::string("malformed header: bad ") + what + " '" + tok + "'");
        v = v * 10 + (ch - '0');
        if (v > 1'000'000'000L) fail(path, std::string("malformed header: ") + what + " overflow");
    }
    return v;
}

}  // namespace

std::variant<BinaryMask, LabelMap> read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open for reading");

    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || magic[1] != '5') fail(path, "malformed header: not a P5 file");

    const long width = parse_header_int(in, path, "width");
    const long height = parse_header_int(in, path, "height");
    const long maxval = parse_header_int(in, path, "maxval");
    if (width < 1 || height < 1) fail(path, "malformed header: non-positive dimensions");
    if (width > 1'000'000 || height > 1'000'000) fail(path, "malformed header: dimension overflow");
    if (maxval != 255 && maxval != 65535)
        fail(path, "unsupported maxval " + std::to_string(maxval));

    // The single whitespace byte after maxval was consumed by the tokenizer;
    // the payload starts immediately.
    const std::size_t n = std::size_t(width) * std::size_t(height);
    const std::size_t bytes_per_sample = maxval == 255 ? 1 : 2;
    std::vector<unsigned char> payload(n * bytes_per_sample);
    in.read(reinterpret_cast<char*>(payload.data()),
            std::streamsize(payload.size()));
    if (std::size_t(in.gcount()) != payload.size()) fail(path, "truncated payload");

    if (maxval == 255) {
        bool binary = true;
        for (unsigned char b : payload)
            if (b != 0 && b != 255) { binary = false; break; }
        if (binary) {
            BinaryMask mask{int(width), int(height)};
            for (std::size_t i = 0; i < n; ++i) mask.bits[i] = payload[i] ? 1 : 0;
            return mask;
        }
        LabelMap labels{int(width), int(height)};
        for (std::size_t i = 0; i < n; ++i) labels.labels[i] = payload[i];
        return labels;
    }

    LabelMap labels{int(width), int(height)};
    for (std::size_t i = 0; i < n; ++i)
        labels.labels[i] = (std::uint32_t(payload[2 * i]) << 8) | payload[2 * i + 1];
    return labels;
}

BinaryMask read_pgm_mask(const std::filesystem::path& path) {
    auto v = read_pgm(path);
    if (auto* mask = std::get_if<BinaryMask>(&v)) return std::move(*mask);
    fail(path, "expected a binary mask (maxval 255 with samples in {0,255})");
}

LabelMap read_pgm_labels(const std::filesystem::path& path) {
    auto v = read_pgm(path);
    if (auto* labels = std::get_if<LabelMap>(&v)) return std::move(*labels);
    // A mask is a valid (degenerate) labelling with a single foreground label.
    const BinaryMask& mask = std::get<BinaryMask>(v);
    LabelMap labels(mask.width, mask.height);
    for (std::size_t i = 0; i < mask.bits.size(); ++i) labels.labels[i] = mask.bits[i];
    return labels;
}

namespace {

void write_header(std::ofstream& out, int width, int height, int maxval) {
    out << "P5\n" << width << " " << height << "\n" << maxval << "\n";
}

}  // namespace

void write_pgm(const BinaryMask& mask, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(path, "cannot open for writing");
    write_header(out, mask.width, mask.height, 255);
    std::vector<unsigned char> payload(mask.bits.size());
    for (std::size_t i = 0; i < mask.bits.size(); ++i)
        payload[i] = mask.bits[i] ? 255 : 0;
    out.write(reinterpret_cast<const char*>(payload.data()), std::streamsize(payload.size()));
    if (!out) fail(path, "write failed");
}

void write_pgm(const LabelMap& labels, const std::filesystem::path& path) {
    if (labels.max_label() > 65535)
        throw std::invalid_argument("PGM " + path.string() +
                                    ": label count exceeds 65535, cannot encode as 16-bit PGM");
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(path, "cannot open for writing");
    write_header(out, labels.width, labels.height, 65535);
    std::vector<unsigned char> payload(labels.labels.size() * 2);
    for (std::size_t i = 0; i < labels.labels.size(); ++i) {
        payload[2 * i] = static_cast<unsigned char>(labels.labels[i] >> 8);
        payload[2 * i + 1] = static_cast<unsigned char>(labels.labels[i] & 0xFF);
    }
    out.write(reinterpret_cast<const char*>(payload.data()), std::streamsize(payload.size()));
    if (!out) fail(path, "write failed");
}

}  // namespace copnet
