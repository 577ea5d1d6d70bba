#include "psbp/io.hpp"

#include <bit>
#include <cmath>
#include <cctype>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

namespace psbp::io {

namespace {

std::ofstream open_out(const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    return out;
}

std::ifstream open_in(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    return in;
}

// Netpbm header tokenizer: whitespace separated, '#' starts a comment that
// runs to end of line. Comments are collected for metadata.
class HeaderReader {
public:
    explicit HeaderReader(std::istream& in) : in_(in) {}

    std::string token()
    {
        std::string tok;
        int c = in_.get();
        while (c != EOF) {
            if (c == '#') {
                std::string line;
                std::getline(in_, line);
                comments_.push_back(line);
                c = in_.get();
                continue;
            }
            if (!std::isspace(c)) {
                break;
            }
            c = in_.get();
        }
        while (c != EOF && !std::isspace(c) && c != '#') {
            tok.push_back(static_cast<char>(c));
            c = in_.get();
        }
        if (tok.empty()) {
            throw ValidationError("truncated image header");
        }
        // The single whitespace after the last header token has been consumed.
        if (c == '#') {
            in_.unget();
        }
        return tok;
    }

    int integer()
    {
        const std::string tok = token();
        std::size_t used = 0;
        int v = 0;
        try {
            v = std::stoi(tok, &used);
        } catch (const std::exception&) {
            throw ValidationError("malformed image header value: " + tok);
        }
        if (used != tok.size()) {
            throw ValidationError("malformed image header value: " + tok);
        }
        return v;
    }

    const std::vector<std::string>& comments() const { return comments_; }

private:
    std::istream& in_;
    std::vector<std::string> comments_;
};

bool host_little_endian()
{
    return std::endian::native == std::endian::little;
}

float read_float(const unsigned char* p, bool little)
{
    unsigned char b[4];
    std::memcpy(b, p, 4);
    if (little != host_little_endian()) {
        std::swap(b[0], b[3]);
        std::swap(b[1], b[2]);
    }
    float f;
    std::memcpy(&f, b, 4);
    return f;
}

void append_float(std::vector<unsigned char>& out, float f)
{
    unsigned char b[4];
    std::memcpy(b, &f, 4);
    if (!host_little_endian()) {
        std::swap(b[0], b[3]);
        std::swap(b[1], b[2]);
    }
    out.insert(out.end(), b, b + 4);
}

struct PfmData {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<float> samples;  // top-to-bottom rows, interleaved channels
};

void write_pfm_raw(const std::filesystem::path& path, const PfmData& d)
{
    std::ofstream out = open_out(path);
    out << (d.channels == 3 ? "PF" : "Pf") << '\n' << d.width << ' ' << d.height << "\n-1.0\n";
    std::vector<unsigned char> bytes;
    bytes.reserve(d.samples.size() * 4);
    const std::size_t row = static_cast<std::size_t>(d.width) * static_cast<std::size_t>(d.channels);
    for (int j = d.height - 1; j >= 0; --j) {
        for (std::size_t k = 0; k < row; ++k) {
            append_float(bytes, d.samples[static_cast<std::size_t>(j) * row + k]);
        }
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw std::runtime_error("failed writing " + path.string());
    }
}

PfmData read_pfm_raw(const std::filesystem::path& path)
{
    std::ifstream in = open_in(path);
    HeaderReader header(in);
    const std::string magic = header.token();
    PfmData d;
    if (magic == "Pf") {
        d.channels = 1;
    } else if (magic == "PF") {
        d.channels = 3;
    } else {
        throw ValidationError(path.string() + ": not a PFM file");
    }
    d.width = header.integer();
    d.height = header.integer();
    const std::string scale_tok = header.token();
    double scale = 0.0;
    try {
        scale = std::stod(scale_tok);
    } catch (const std::exception&) {
        throw ValidationError(path.string() + ": malformed PFM scale");
    }
    if (d.width <= 0 || d.height <= 0 || scale == 0.0) {
        throw ValidationError(path.string() + ": invalid PFM header");
    }
    const bool little = scale < 0.0;
    const std::size_t row = static_cast<std::size_t>(d.width) * static_cast<std::size_t>(d.channels);
    const std::size_t count = row * static_cast<std::size_t>(d.height);
    std::vector<unsigned char> bytes(count * 4);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (static_cast<std::size_t>(in.gcount()) != bytes.size()) {
        throw ValidationError(path.string() + ": truncated PFM data");
    }
    d.samples.resize(count);
    for (int jf = 0; jf < d.height; ++jf) {
        const int j = d.height - 1 - jf;
        for (std::size_t k = 0; k < row; ++k) {
            d.samples[static_cast<std::size_t>(j) * row + k] =
                read_float(bytes.data() + (static_cast<std::size_t>(jf) * row + k) * 4, little);
        }
    }
    return d;
}

} // namespace

void write_pgm(const std::filesystem::path& path, const Image& image, double full_scale, int maxval)
{
    if (!(full_scale > 0.0) || !std::isfinite(full_scale)) {
        throw ValidationError("write_pgm: full_scale must be positive and finite");
    }
    if (maxval < 1 || maxval > 65535) {
        throw ValidationError("write_pgm: maxval must lie in [1, 65535]");
    }
    std::ofstream out = open_out(path);
    out << "P5\n# origin " << to_string(image.origin) << '\n'
        << image.width() << ' ' << image.height() << '\n'
        << maxval << '\n';
    const bool wide = maxval > 255;
    std::vector<unsigned char> bytes;
    bytes.reserve(image.data.size() * (wide ? 2 : 1));
    for (double v : image.data.data()) {
        double s = std::round(v / full_scale * maxval);
        if (!(s >= 0.0)) {
            s = 0.0;
        }
        s = std::min(s, static_cast<double>(maxval));
        const auto q = static_cast<unsigned>(s);
        if (wide) {
            bytes.push_back(static_cast<unsigned char>(q >> 8));
            bytes.push_back(static_cast<unsigned char>(q & 0xff));
        } else {
            bytes.push_back(static_cast<unsigned char>(q));
        }
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw std::runtime_error("failed writing " + path.string());
    }
}

Image read_pgm(const std::filesystem::path& path, double full_scale)
{
    std::ifstream in = open_in(path);
    HeaderReader header(in);
    if (header.token() != "P5") {
        throw ValidationError(path.string() + ": not a binary PGM (P5) file");
    }
    const int w = header.integer();
    const int h = header.integer();
    const int maxval = header.integer();
    if (w <= 0 || h <= 0 || maxval < 1 || maxval > 65535) {
        throw ValidationError(path.string() + ": invalid PGM header");
    }
    const bool wide = maxval > 255;
    const std::size_t count = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    std::vector<unsigned char> bytes(count * (wide ? 2 : 1));
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (static_cast<std::size_t>(in.gcount()) != bytes.size()) {
        throw ValidationError(path.string() + ": truncated PGM data");
    }

    Image img;
    img.data = RealGrid(w, h, 0.0);
    img.full_scale = full_scale;
    img.origin = Origin::Corner;
    for (const auto& c : header.comments()) {
        std::istringstream ss(c);
        std::string key, value;
        if (ss >> key >> value && key == "origin") {
            img.origin = origin_from_string(value);
        }
    }
    for (std::size_t i = 0; i < count; ++i) {
        const unsigned q = wide ? (static_cast<unsigned>(bytes[2 * i]) << 8) | bytes[2 * i + 1] : bytes[i];
        img.data[i] = static_cast<double>(q) / maxval * full_scale;
    }
    return img;
}

void write_mask_pgm(const std::filesystem::path& path, const Mask& mask)
{
    Image img;
    img.data = RealGrid(mask.width(), mask.height(), 0.0);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        img.data[i] = mask[i] ? 1.0 : 0.0;
    }
    write_pgm(path, img, 1.0, 255);
}

void write_pfm(const std::filesystem::path& path, const RealGrid& grid, const Mask& mask)
{
    if (!grid.same_shape(mask)) {
        throw ValidationError("write_pfm: dimension mismatch");
    }
    PfmData d{grid.width(), grid.height(), 1, {}};
    d.samples.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        d.samples[i] = mask[i] ? static_cast<float>(grid[i]) : std::numeric_limits<float>::quiet_NaN();
    }
    write_pfm_raw(path, d);
}

void write_pfm(const std::filesystem::path& path, const RealGrid& grid)
{
    write_pfm(path, grid, full_mask(grid.width(), grid.height()));
}

PfmChannel read_pfm(const std::filesystem::path& path)
{
    const PfmData d = read_pfm_raw(path);
    if (d.channels != 1) {
        throw ValidationError(path.string() + ": expected a single-channel PFM");
    }
    PfmChannel out{RealGrid(d.width, d.height, 0.0), Mask(d.width, d.height, 0)};
    for (std::size_t i = 0; i < d.samples.size(); ++i) {
        const float v = d.samples[i];
        if (std::isfinite(v)) {
            out.values[i] = v;
            out.mask[i] = 1;
        }
    }
    return out;
}

void write_normals_pfm(const std::filesystem::path& path, const NormalField& normals)
{
    PfmData d{normals.width(), normals.height(), 3, {}};
    d.samples.resize(normals.n.size() * 3);
    const float nan = std::numeric_limits<float>::quiet_NaN();
    for (std::size_t i = 0; i < normals.n.size(); ++i) {
        for (int c = 0; c < 3; ++c) {
            d.samples[3 * i + c] = normals.mask[i] ? static_cast<float>(normals.n[i][c]) : nan;
        }
    }
    write_pfm_raw(path, d);
}

NormalField read_normals_pfm(const std::filesystem::path& path)
{
    const PfmData d = read_pfm_raw(path);
    if (d.channels != 3) {
        throw ValidationError(path.string() + ": expected a three-channel PFM");
    }
    NormalField out(d.width, d.height);
    for (std::size_t i = 0; i < out.n.size(); ++i) {
        const Vec3 v(d.samples[3 * i], d.samples[3 * i + 1], d.samples[3 * i + 2]);
        if (v.allFinite()) {
            out.n[i] = v;
        } else {
            out.mask[i] = 0;
            out.n[i] = Vec3(0, 0, 1);
        }
    }
    return out;
}

void write_depth(const std::filesystem::path& path, const DepthMap& depth)
{
    write_pfm(path, depth.z, depth.mask);
}

DepthMap read_depth(const std::filesystem::path& path)
{
    PfmChannel ch = read_pfm(path);
    DepthMap d;
    d.z = std::move(ch.values);
    d.mask = std::move(ch.mask);
    d.validate();
    return d;
}

void write_gradient(const std::filesystem::path& gx_path, const std::filesystem::path& gy_path,
                    const GradientField& g)
{
    write_pfm(gx_path, g.gx, g.mask);
    write_pfm(gy_path, g.gy, g.mask);
}

GradientField read_gradient(const std::filesystem::path& gx_path, const std::filesystem::path& gy_path,
                            GradientKind kind)
{
    PfmChannel x = read_pfm(gx_path);
    PfmChannel y = read_pfm(gy_path);
    if (!x.values.same_shape(y.values)) {
        throw ValidationError("gradient component files have mismatched dimensions");
    }
    GradientField g;
    g.kind = kind;
    g.gx = std::move(x.values);
    g.gy = std::move(y.values);
    g.mask = mask_and(x.mask, y.mask);
    g.normalize_masked();
    return g;
}

} // namespace psbp::io
