#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/LU>

#include "psbp/geometry.hpp"
#include "psbp/render.hpp"
#include "psbp/solve.hpp"
#include "scenes.hpp"

using namespace psbp;

namespace {

CameraIntrinsics at_point(double x, double y, double f = 1.0)
{
    CameraIntrinsics c;
    c.focal = f;
    c.pitch_x = 1.0;
    c.pitch_y = 1.0;
    c.principal_x = -x;
    c.principal_y = -y;
    return c;
}

Images constant_images(int w, int h, const Intensities& v)
{
    Images out;
    for (int k = 0; k < 3; ++k) {
        out[k].data = RealGrid(w, h, v[k]);
        out[k].full_scale = std::numeric_limits<double>::infinity();
    }
    return out;
}

Images render_all(const GradientField& g, const Lights& lights, const Material& m, const CameraIntrinsics& intr,
                  bool specular)
{
    Images out;
    for (int k = 0; k < 3; ++k) {
        out[k] = specular ? render_blinn_phong_perspective(g, lights[k], m, intr)
                          : render_lambertian_perspective(g, lights[k], m, intr);
    }
    return out;
}

GradientField smooth_gradient(int w, int h)
{
    GradientField g(w, h);
    for (int j = 0; j < h; ++j) {
        for (int i = 0; i < w; ++i) {
            const double x = (i - 0.5 * w) / w;
            const double y = (j - 0.5 * h) / h;
            g.gx(i, j) = 0.5 * std::sin(3 * x + 0.2) * std::cos(2 * y);
            g.gy(i, j) = 0.4 * std::cos(2 * x) * std::sin(3 * y - 0.4);
        }
    }
    return g;
}

} // namespace

TEST_CASE("Woodham with axis-aligned lights")
{
    const Lights axes{LightSource{Vec3(1, 0, 0)}, LightSource{Vec3(0, 1, 0)}, LightSource{Vec3(0, 0, 1)}};
    const WoodhamResult r = woodham_normals(constant_images(1, 1, {0.0, 0.0, 0.8}), axes);
    CHECK(r.normals.mask[0] == 1);
    CHECK(r.normals.n[0].isApprox(Vec3(0, 0, 1)));
    CHECK(r.albedo[0] == doctest::Approx(0.8));
}

TEST_CASE("Woodham recovers a frontal normal")
{
    const Lights lights{LightSource{Vec3(0, 0, 1)}, LightSource{Vec3(1, 0, 1)}, LightSource{Vec3(0, 1, 1)}};
    const double s = 1.0 / std::sqrt(2.0);
    const WoodhamResult r = woodham_normals(constant_images(1, 1, {1.0, s, s}), lights);
    CHECK(r.normals.n[0].isApprox(Vec3(0, 0, 1), 1e-12));
    CHECK(r.albedo[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("Woodham rejects coplanar lights")
{
    const Lights flat{LightSource{Vec3(1, 0, 0)}, LightSource{Vec3(0, 1, 0)}, LightSource{Vec3(1, 1, 0)}};
    CHECK_THROWS_AS(woodham_normals(constant_images(2, 2, {0.5, 0.5, 0.5}), flat), ValidationError);
    const Lights same{LightSource{Vec3(0, 1, 1)}, LightSource{Vec3(0, 2, 2)}, LightSource{Vec3(1, 1, 1)}};
    CHECK_THROWS_AS(woodham_normals(constant_images(2, 2, {0.5, 0.5, 0.5}), same), ValidationError);
}

TEST_CASE("closed form recovers a flat log-depth at an off-axis pixel")
{
    const Lights lights = test::standard_lights();
    const CameraIntrinsics intr = at_point(0.1, 0.2);
    const Material m{0.5, 0.0, 1.0};
    GradientField flat(1, 1);
    const ClosedFormResult r = lambertian_pps_closed_form(render_all(flat, lights, m, intr, false), lights, intr);
    REQUIRE(r.gradient.mask[0] == 1);
    CHECK(std::abs(r.gradient.gx[0]) < 1e-12);
    CHECK(std::abs(r.gradient.gy[0]) < 1e-12);
    CHECK(r.albedo[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("closed form is exact on a smooth field")
{
    const Lights lights = test::standard_lights(1.3);
    const CameraIntrinsics intr = test::sphere_camera(32, 32);
    const GradientField g = smooth_gradient(32, 32);
    const Material m{0.7, 0.0, 1.0};
    const Images imgs = render_all(g, lights, m, intr, false);
    const ClosedFormResult r = lambertian_pps_closed_form(imgs, lights, intr);
    const Mask valid = mask_and(r.gradient.mask, valid_input_mask(imgs));
    REQUIRE(count_valid(valid) > 900);
    double worst = 0.0;
    double worst_albedo = 0.0;
    for (std::size_t i = 0; i < valid.size(); ++i) {
        if (valid[i]) {
            worst = std::max({worst, std::abs(r.gradient.gx[i] - g.gx[i]), std::abs(r.gradient.gy[i] - g.gy[i])});
            worst_albedo = std::max(worst_albedo, std::abs(r.albedo[i] - 0.7));
        }
    }
    CHECK(worst < 1e-8);
    CHECK(worst_albedo < 1e-8);
}

TEST_CASE("closed form masks every pixel under identical lights")
{
    const Lights same{LightSource{Vec3(0, 1, 2)}, LightSource{Vec3(0, 1, 2)}, LightSource{Vec3(0, 1, 2)}};
    const ClosedFormResult r =
        lambertian_pps_closed_form(constant_images(8, 8, {0.4, 0.4, 0.4}), same, test::sphere_camera(8, 8));
    CHECK(count_valid(r.gradient.mask) == 0);
    CHECK(r.singular == 64);
}

TEST_CASE("closed-form terms match the explicit formulas")
{
    // Independent evaluation of the linear system with r_i = I_i |L_i| / l_d.
    const Lights lights{LightSource{Vec3(0.3, -0.2, 1.0), 1.1, 1.0}, LightSource{Vec3(1, 0.5, 2), 0.9, 1.0},
                        LightSource{Vec3(-0.4, 1, 2), 1.2, 1.0}};
    const ImagePoint p{0.13, -0.21};
    const double f = 1.4;
    const Intensities in{0.61, 0.47, 0.52};
    const ClosedFormTerms t = closed_form_terms(p, in, lights, f);
    double r[3];
    for (int k = 0; k < 3; ++k) {
        r[k] = in[k] * lights[k].direction.norm() / lights[k].diffuse_intensity;
        CHECK(t.r[k] == doctest::Approx(r[k]).epsilon(1e-14));
    }
    // Solve for nu from the ratio equations r_i (f a_j nx + f b_j ny + c_j w) = r_j (...)
    // by a direct 2x2 solve built from scratch.
    auto row = [&](int i, int j) {
        const Vec3 li = lights[i].direction;
        const Vec3 lj = lights[j].direction;
        // r_j (f a_i nx + f b_i ny + c_i w) - r_i (f a_j nx + f b_j ny + c_j w) = 0 with w = 1 + x nx + y ny
        const double cx = r[j] * (f * li.x() + li.z() * p.x) - r[i] * (f * lj.x() + lj.z() * p.x);
        const double cy = r[j] * (f * li.y() + li.z() * p.y) - r[i] * (f * lj.y() + lj.z() * p.y);
        const double c0 = r[j] * li.z() - r[i] * lj.z();
        return Eigen::Vector3d(cx, cy, c0);
    };
    const Eigen::Vector3d a = row(0, 1);
    const Eigen::Vector3d b = row(1, 2);
    Eigen::Matrix2d mat;
    mat << a[0], a[1], b[0], b[1];
    const Eigen::Vector2d sol = mat.inverse() * (Eigen::Vector2d(-a[2], -b[2]));
    CHECK((t.h1 * t.m4 - t.m2 * t.h2) / t.det() == doctest::Approx(sol[0]).epsilon(1e-10));
    CHECK((t.m1 * t.h2 - t.h1 * t.m3) / t.det() == doctest::Approx(sol[1]).epsilon(1e-10));
}

TEST_CASE("indicator: grazing rigs flag the pixel-dependent expressions")
{
    const Lights flat{LightSource{Vec3(1, 0.5, 0)}, LightSource{Vec3(-0.3, 1, 0)}, LightSource{Vec3(0.7, -1, 0)}};
    const ConditioningReport r = sensitivity_indicator(flat, 16, 12, test::sphere_camera(16, 12));
    for (int e = 3; e < kIndicatorCount; ++e) {
        CHECK(count_valid(r.violated[e]) == 16u * 12u);
    }
    CHECK_FALSE(r.lights_non_coplanar);
}

TEST_CASE("indicator: axis lights flag everything at the principal point")
{
    const Lights axes{LightSource{Vec3(1, 0, 0)}, LightSource{Vec3(0, 1, 0)}, LightSource{Vec3(0, 0, 1)}};
    CameraIntrinsics intr = test::sphere_camera(5, 5);
    intr.principal_x = 2;
    intr.principal_y = 2;
    const ConditioningReport r = sensitivity_indicator(axes, 5, 5, intr);
    for (int e = 3; e < kIndicatorCount; ++e) {
        CHECK(r.violated[e](2, 2) == 1);
    }
    CHECK(r.lights_non_coplanar);
}

TEST_CASE("indicator: generic non-coplanar rig leaves the light determinants clear")
{
    const Lights rig{LightSource{Vec3(1, 1, 1)}, LightSource{Vec3(-1, 1, 1)}, LightSource{Vec3(0, -1, 1)}};
    const ConditioningReport r = sensitivity_indicator(rig, 9, 9, test::sphere_camera(9, 9));
    CHECK(r.lights_non_coplanar);
    for (int e = 0; e < 3; ++e) {
        CHECK(count_valid(r.violated[e]) == 0);
    }
    // Direct evaluation of the three 2x2 determinants.
    const auto expr = indicator_expressions({0.2, -0.1}, rig);
    CHECK(expr[0] == doctest::Approx(1.0 * 0.0 - 1.0 * -1.0));
    CHECK(expr[1] == doctest::Approx(1.0 * 1.0 - (-1.0) * 1.0));
    CHECK(expr[2] == doctest::Approx(-1.0 * -1.0 - 1.0 * 0.0));
}

TEST_CASE("indicator flags every pixel the closed form finds singular")
{
    const Lights lights{LightSource{Vec3(0, 0, 1)}, LightSource{Vec3(1, 0, 2)}, LightSource{Vec3(2, 0, 3)}};
    const CameraIntrinsics intr = test::sphere_camera(15, 15);
    const ClosedFormResult cf = lambertian_pps_closed_form(constant_images(15, 15, {0.3, 0.7, 0.5}), lights, intr);
    const ConditioningReport r = sensitivity_indicator(lights, 15, 15, intr);
    REQUIRE(cf.singular > 0);
    for (std::size_t i = 0; i < cf.gradient.mask.size(); ++i) {
        if (!cf.gradient.mask[i]) {
            bool any = false;
            for (const Mask& v : r.violated) {
                any = any || v[i];
            }
            CHECK(any);
        }
    }
}

TEST_CASE("ratio residuals vanish at the rendering gradient")
{
    const Lights lights = test::standard_lights(1.2, 1.2);
    const Material m{0.5, 0.5, 150};
    const CameraIntrinsics intr = test::sphere_camera(16, 16);
    const GradientField g = smooth_gradient(16, 16);
    const Images imgs = render_all(g, lights, m, intr, true);
    for (int j = 0; j < 16; ++j) {
        for (int i = 0; i < 16; ++i) {
            const Intensities in{imgs[0](i, j), imgs[1](i, j), imgs[2](i, j)};
            const Eigen::Vector3d r = blinn_phong_residuals(g.gx(i, j), g.gy(i, j), centerize(i, j, intr), in, lights, m, intr);
            CHECK(r.norm() < 1e-12);
        }
    }
}

TEST_CASE("ratio residuals without specular part are cross-multiplied Lambertian ratios")
{
    const Lights lights = test::standard_lights();
    const Material m{0.6, 0.0, 1};
    const CameraIntrinsics intr = at_point(0.05, -0.1);
    const Intensities in{0.5, 0.4, 0.45};
    const double nx = 0.3, ny = -0.2;
    const Eigen::Vector3d r = blinn_phong_residuals(nx, ny, {0.05, -0.1}, in, lights, m, intr);
    const Vec3 n = perspective_normal({0.05, -0.1}, nx, ny, 1.0);
    double shade[3];
    for (int k = 0; k < 3; ++k) {
        shade[k] = 0.6 * std::max(0.0, n.dot(lights[k].unit()));
    }
    CHECK(r[0] == doctest::Approx(in[0] * shade[1] - in[1] * shade[0]).epsilon(1e-12));
    CHECK(r[1] == doctest::Approx(in[1] * shade[2] - in[2] * shade[1]).epsilon(1e-12));
    CHECK(r[2] == doctest::Approx(in[0] * shade[2] - in[2] * shade[0]).epsilon(1e-12));

    // At the closed-form solution all residuals vanish.
    GradientField g(1, 1);
    g.gx[0] = nx;
    g.gy[0] = ny;
    const Images imgs = render_all(g, lights, m, intr, false);
    const ClosedFormResult cf = lambertian_pps_closed_form(imgs, lights, intr);
    const Intensities exact{imgs[0].data[0], imgs[1].data[0], imgs[2].data[0]};
    CHECK(blinn_phong_residuals(cf.gradient.gx[0], cf.gradient.gy[0], {0.05, -0.1}, exact, lights, m, intr).norm() <
          1e-12);
}

TEST_CASE("identical equation pair gives a zero residual")
{
    const Lights lights{LightSource{Vec3(0, 1, 2)}, LightSource{Vec3(0, 1, 2)}, LightSource{Vec3(1, 0, 2)}};
    const Eigen::Vector3d r =
        blinn_phong_residuals(0.2, 0.1, {0.1, 0.1}, {0.5, 0.5, 0.3}, lights, Material{0.5, 0.5, 20}, at_point(0.1, 0.1));
    CHECK(r[0] == 0.0);
}

TEST_CASE("analytic residual Jacobian matches central differences")
{
    std::mt19937 rng(21);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const Lights lights = test::standard_lights(1.2, 1.1);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const PixelModel pm = make_pixel_model({0.3 * u(rng), 0.3 * u(rng)}, lights, Material{0.4, 0.6, 30 + 20 * u(rng)}, 1.0);
        const Intensities in{0.6 + 0.2 * u(rng), 0.5 + 0.2 * u(rng), 0.55 + 0.2 * u(rng)};
        const Eigen::Vector2d x(0.7 * u(rng), 0.7 * u(rng));
        Eigen::Matrix<double, 3, 2> ja;
        blinn_phong_residuals(pm, in, x[0], x[1], &ja);
        const ResidualFn f = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
            return blinn_phong_residuals(pm, in, v[0], v[1]);
        };
        const Eigen::MatrixXd jn = finite_difference_jacobian(f, x);
        worst = std::max(worst, (ja - jn).norm() / std::max(jn.norm(), 1e-12));
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("ratio terms are finite")
{
    const Lights lights = test::standard_lights();
    const RatioTerms t = ratio_terms({0.1, -0.2}, 1.0, lights[0], lights[1]);
    CHECK(t.Q.allFinite());
    CHECK(t.T.allFinite());
    CHECK(std::isfinite(t.k));
    CHECK(std::isfinite(t.e));
}

TEST_CASE("Blinn-Phong perspective solve reduces to the closed form without specular part")
{
    const Lights lights = test::standard_lights();
    const Material m{0.5, 0.0, 1.0};
    const CameraIntrinsics intr = test::sphere_camera(24, 24);
    const Images imgs = render_all(smooth_gradient(24, 24), lights, m, intr, false);
    const ClosedFormResult cf = lambertian_pps_closed_form(imgs, lights, intr);
    const PerspectiveSolveResult bp = blinn_phong_pps_solve(imgs, lights, m, intr);
    for (std::size_t i = 0; i < cf.gradient.mask.size(); ++i) {
        if (cf.gradient.mask[i] && bp.gradient.mask[i]) {
            CHECK(std::abs(cf.gradient.gx[i] - bp.gradient.gx[i]) < 1e-6);
            CHECK(std::abs(cf.gradient.gy[i] - bp.gradient.gy[i]) < 1e-6);
        }
    }
    CHECK(count_valid(bp.gradient.mask) == count_valid(mask_and(cf.gradient.mask, valid_input_mask(imgs))));
}

TEST_CASE("Blinn-Phong perspective solve recovers a flat scene")
{
    const Lights lights = test::standard_lights(1.2, 1.2);
    for (const Material& m : {Material{0.5, 0.5, 150}, Material{0.9, 0.1, 5}}) {
        const CameraIntrinsics intr = test::sphere_camera(12, 12);
        const Images imgs = render_all(GradientField(12, 12), lights, m, intr, true);
        const PerspectiveSolveResult r = blinn_phong_pps_solve(imgs, lights, m, intr);
        CHECK(count_valid(r.gradient.mask) == 144);
        for (std::size_t i = 0; i < 144; ++i) {
            CHECK(std::abs(r.gradient.gx[i]) < 1e-8);
            CHECK(std::abs(r.gradient.gy[i]) < 1e-8);
        }
    }
}

TEST_CASE("Blinn-Phong perspective solve recovers a specular smooth field")
{
    const Lights lights = test::standard_lights(1.2, 1.2);
    const Material m{0.5, 0.5, 60};
    const CameraIntrinsics intr = test::sphere_camera(24, 24);
    const GradientField g = smooth_gradient(24, 24);
    const PerspectiveSolveResult r = blinn_phong_pps_solve(render_all(g, lights, m, intr, true), lights, m, intr);
    REQUIRE(count_valid(r.gradient.mask) == 576);
    for (std::size_t i = 0; i < 576; ++i) {
        CHECK(std::abs(r.gradient.gx[i] - g.gx[i]) < 1e-7);
        CHECK(std::abs(r.gradient.gy[i] - g.gy[i]) < 1e-7);
    }
}

TEST_CASE("Blinn-Phong orthographic solve")
{
    const Lights lights = test::standard_lights();
    SUBCASE("frontal normal under generic lights")
    {
        const Material m{0.6, 0.4, 30};
        NormalField n(1, 1);
        Images imgs;
        for (int k = 0; k < 3; ++k) {
            imgs[k] = render_blinn_phong_orthographic(n, lights[k], m);
        }
        const OrthographicSolveResult r = blinn_phong_ortho_solve(imgs, lights, m);
        REQUIRE(r.normals.mask[0] == 1);
        CHECK((r.normals.n[0] - Vec3(0, 0, 1)).norm() < 1e-8);
    }
    SUBCASE("without specular part it matches Woodham")
    {
        const Material m{0.7, 0.0, 1};
        const SceneSpec s = test::sphere_scene(m, 1.0, 1.0, Projection::Orthographic);
        const RenderedScene rs = render_scene(s, ReflectanceModel::Lambertian);
        const OrthographicSolveResult r = blinn_phong_ortho_solve(rs.images, lights, m);
        const WoodhamResult w = woodham_normals(rs.images, lights);
        for (std::size_t i = 0; i < r.normals.mask.size(); ++i) {
            if (r.normals.mask[i] && w.normals.mask[i]) {
                CHECK((r.normals.n[i] - w.normals.n[i]).norm() < 1e-6);
            }
        }
    }
    SUBCASE("a black image masks pixels without failing")
    {
        Images imgs = constant_images(4, 4, {0.5, 0.4, 0.0});
        const OrthographicSolveResult r = blinn_phong_ortho_solve(imgs, lights, Material{0.5, 0.5, 10});
        CHECK(count_valid(r.normals.mask) == 0);
        CHECK(r.stats.input_masked == 16);
    }
}

TEST_CASE("valid input mask drops dark and saturated pixels")
{
    Images imgs = constant_images(3, 1, {0.5, 0.5, 0.5});
    for (auto& im : imgs) {
        im.full_scale = 1.0;
    }
    imgs[0].data[0] = 0.0;
    imgs[1].data[1] = 0.9995;
    const Mask m = valid_input_mask(imgs);
    CHECK(m[0] == 0);
    CHECK(m[1] == 0);
    CHECK(m[2] == 1);
}
