#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>

#include "psbp/io.hpp"

using namespace psbp;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir()
    {
        path = fs::temp_directory_path() / ("psbp_io_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

TEST_CASE("16-bit PGM round trip is exact on the quantization grid")
{
    TempDir dir;
    Image img;
    img.data = RealGrid(5, 3);
    img.origin = Origin::PrincipalPoint;
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        img.data[i] = static_cast<double>(i * 4099 % 65536) / 65535.0 * 1.25;
    }
    io::write_pgm(dir.path / "a.pgm", img, 1.25);
    const Image back = io::read_pgm(dir.path / "a.pgm", 1.25);
    CHECK(back.origin == Origin::PrincipalPoint);
    CHECK(back.full_scale == 1.25);
    REQUIRE(back.data.same_shape(img.data));
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        CHECK(back.data[i] == doctest::Approx(img.data[i]).epsilon(1e-15));
    }
    // Rewriting the decoded image reproduces the file byte for byte.
    io::write_pgm(dir.path / "b.pgm", back, 1.25);
    CHECK(slurp(dir.path / "a.pgm") == slurp(dir.path / "b.pgm"));
}

TEST_CASE("16-bit PGM samples are big-endian")
{
    TempDir dir;
    Image img;
    img.data = RealGrid(1, 1, 258.0 / 65535.0);
    io::write_pgm(dir.path / "be.pgm", img, 1.0);
    const std::string bytes = slurp(dir.path / "be.pgm");
    REQUIRE(bytes.size() >= 2);
    CHECK(static_cast<unsigned char>(bytes[bytes.size() - 2]) == 1);
    CHECK(static_cast<unsigned char>(bytes[bytes.size() - 1]) == 2);
}

TEST_CASE("8-bit PGM reads as sample / 255")
{
    TempDir dir;
    {
        std::ofstream out(dir.path / "g.pgm", std::ios::binary);
        out << "P5\n# a comment\n2 1\n255\n";
        out.put(static_cast<char>(0));
        out.put(static_cast<char>(51));
    }
    const Image img = io::read_pgm(dir.path / "g.pgm");
    CHECK(img.origin == Origin::Corner);
    CHECK(img.data[0] == 0.0);
    CHECK(img.data[1] == doctest::Approx(0.2));
}

TEST_CASE("PGM writing clips out-of-range values")
{
    TempDir dir;
    Image img;
    img.data = RealGrid(2, 1);
    img.data[0] = 3.0;
    img.data[1] = 0.5;
    io::write_pgm(dir.path / "c.pgm", img, 1.0, 255);
    const Image back = io::read_pgm(dir.path / "c.pgm");
    CHECK(back.data[0] == 1.0);
    CHECK(back.data[1] == doctest::Approx(128.0 / 255.0));
}

TEST_CASE("malformed PGM files are rejected")
{
    TempDir dir;
    {
        std::ofstream out(dir.path / "p2.pgm");
        out << "P2\n1 1\n255\n0\n";
    }
    CHECK_THROWS_AS(io::read_pgm(dir.path / "p2.pgm"), ValidationError);
    {
        std::ofstream out(dir.path / "short.pgm", std::ios::binary);
        out << "P5\n4 4\n255\n";
        out.put('x');
    }
    CHECK_THROWS_AS(io::read_pgm(dir.path / "short.pgm"), ValidationError);
    CHECK_THROWS(io::read_pgm(dir.path / "missing.pgm"));
}

TEST_CASE("PFM round trip keeps float values and the mask")
{
    TempDir dir;
    RealGrid g(4, 3);
    Mask m = full_mask(4, 3);
    for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] = static_cast<float>(0.1 * static_cast<double>(i) - 0.35);
    }
    m(1, 2) = 0;
    io::write_pfm(dir.path / "a.pfm", g, m);
    const io::PfmChannel back = io::read_pfm(dir.path / "a.pfm");
    CHECK(back.mask == m);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (m[i]) {
            CHECK(back.values[i] == g[i]);
        }
    }
    const std::string bytes = slurp(dir.path / "a.pfm");
    CHECK(bytes.rfind("Pf\n4 3\n-1", 0) == 0);
}

TEST_CASE("PFM rows are stored bottom to top")
{
    TempDir dir;
    RealGrid g(1, 2);
    g(0, 0) = 1.0;
    g(0, 1) = 2.0;
    io::write_pfm(dir.path / "r.pfm", g);
    const std::string bytes = slurp(dir.path / "r.pfm");
    float first = 0.0f;
    std::memcpy(&first, bytes.data() + bytes.size() - 8, 4);
    CHECK(first == 2.0f);
}

TEST_CASE("depth, gradient and normal files round trip")
{
    TempDir dir;
    DepthMap d(3, 2);
    for (std::size_t i = 0; i < d.z.size(); ++i) {
        d.z[i] = 1.5 + 0.25 * static_cast<double>(i);
    }
    d.mask[4] = 0;
    d.z[4] = 0.0;
    io::write_depth(dir.path / "d.pfm", d);
    const DepthMap db = io::read_depth(dir.path / "d.pfm");
    CHECK(db.z == d.z);
    CHECK(db.mask == d.mask);

    GradientField g(3, 2);
    for (std::size_t i = 0; i < g.gx.size(); ++i) {
        g.gx[i] = 0.5 * static_cast<double>(i);
        g.gy[i] = -0.25 * static_cast<double>(i);
    }
    g.mask[1] = 0;
    g.normalize_masked();
    io::write_gradient(dir.path / "gx.pfm", dir.path / "gy.pfm", g);
    const GradientField gb = io::read_gradient(dir.path / "gx.pfm", dir.path / "gy.pfm", GradientKind::LogDepth);
    CHECK(gb.gx == g.gx);
    CHECK(gb.gy == g.gy);
    CHECK(gb.mask == g.mask);

    NormalField n(2, 2);
    n.n[1] = Vec3(0.6, 0.0, 0.8);
    n.n[2] = Vec3(0.0, -0.6, 0.8);
    n.mask[3] = 0;
    io::write_normals_pfm(dir.path / "n.pfm", n);
    const NormalField nb = io::read_normals_pfm(dir.path / "n.pfm");
    CHECK(nb.mask == n.mask);
    for (int i = 0; i < 3; ++i) {
        CHECK((nb.n[i] - n.n[i]).norm() < 1e-7);
    }
    CHECK_THROWS_AS(io::read_normals_pfm(dir.path / "d.pfm"), ValidationError);
    CHECK_THROWS_AS(io::read_pfm(dir.path / "n.pfm"), ValidationError);
}

TEST_CASE("mask PGM uses 0 and 255")
{
    TempDir dir;
    Mask m(2, 1, 0);
    m[1] = 1;
    io::write_mask_pgm(dir.path / "m.pgm", m);
    const std::string bytes = slurp(dir.path / "m.pgm");
    CHECK(static_cast<unsigned char>(bytes[bytes.size() - 2]) == 0);
    CHECK(static_cast<unsigned char>(bytes[bytes.size() - 1]) == 255);
}
