#include "psbp/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <queue>

#include "psbp/geometry.hpp"
#include "psbp/io.hpp"

namespace psbp {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

[[noreturn]] void field_error(const std::string& field, const std::string& what)
{
    throw ValidationError("config field \"" + field + "\": " + what);
}

double number(const json& j, const std::string& field)
{
    if (!j.is_number()) {
        field_error(field, "expected a number");
    }
    return j.get<double>();
}

double number_or(const json& obj, const char* key, const std::string& prefix, double fallback)
{
    return obj.contains(key) ? number(obj.at(key), prefix + key) : fallback;
}

Vec3 vec3(const json& j, const std::string& field)
{
    if (!j.is_array() || j.size() != 3) {
        field_error(field, "expected an array of 3 numbers");
    }
    return Vec3(number(j[0], field), number(j[1], field), number(j[2], field));
}

std::array<double, 2> pair(const json& j, const std::string& field)
{
    if (!j.is_array() || j.size() != 2) {
        field_error(field, "expected an array of 2 numbers");
    }
    return {number(j[0], field), number(j[1], field)};
}

std::string string_field(const json& j, const std::string& field)
{
    if (!j.is_string()) {
        field_error(field, "expected a string");
    }
    return j.get<std::string>();
}

fs::path resolve(const fs::path& base, const fs::path& p)
{
    return p.is_absolute() || base.empty() ? p : base / p;
}

ReflectanceModel model_from_string(const std::string& s, const std::string& field)
{
    if (s == "lambertian") {
        return ReflectanceModel::Lambertian;
    }
    if (s == "blinn-phong") {
        return ReflectanceModel::BlinnPhong;
    }
    field_error(field, "unknown reflectance model \"" + s + "\"");
}

IntegrationSolver solver_from_string(const std::string& s)
{
    if (s == "automatic") {
        return IntegrationSolver::Automatic;
    }
    if (s == "cosine-transform") {
        return IntegrationSolver::CosineTransform;
    }
    if (s == "conjugate-gradient") {
        return IntegrationSolver::ConjugateGradient;
    }
    field_error("integration.solver", "unknown solver \"" + s + "\"");
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool is_blinn_phong(Method m)
{
    return m == Method::BlinnPhongPPN || m == Method::BlinnPhongPPS;
}

void write_json(const fs::path& path, const json& doc)
{
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out << doc.dump(2) << '\n';
}

json stats_json(const SolveStats& s)
{
    return {{"input_masked", s.input_masked},
            {"not_converged", s.not_converged},
            {"solved", s.solved},
            {"unsolvable", s.unsolvable}};
}

} // namespace

std::string to_string(Method method)
{
    switch (method) {
    case Method::LambertPPN:
        return "lambert-ppn";
    case Method::LambertPPS:
        return "lambert-pps";
    case Method::BlinnPhongPPN:
        return "bp-ppn";
    case Method::BlinnPhongPPS:
        return "bp-pps";
    }
    return "";
}

Method method_from_string(const std::string& s)
{
    for (Method m : {Method::LambertPPN, Method::LambertPPS, Method::BlinnPhongPPN, Method::BlinnPhongPPS}) {
        if (to_string(m) == s) {
            return m;
        }
    }
    field_error("method", "unknown method \"" + s + "\"");
}

std::string to_string(Mode mode)
{
    switch (mode) {
    case Mode::Render:
        return "render";
    case Mode::Reconstruct:
        return "reconstruct";
    case Mode::Evaluate:
        return "evaluate";
    case Mode::Conditioning:
        return "conditioning";
    }
    return "";
}

Mode mode_from_string(const std::string& s)
{
    for (Mode m : {Mode::Render, Mode::Reconstruct, Mode::Evaluate, Mode::Conditioning}) {
        if (to_string(m) == s) {
            return m;
        }
    }
    field_error("mode", "unknown mode \"" + s + "\"");
}

PipelineConfig PipelineConfig::from_json(const json& doc, const fs::path& base_dir)
{
    if (!doc.is_object()) {
        throw ValidationError("config must be a JSON object");
    }
    PipelineConfig cfg;
    if (doc.contains("mode")) {
        cfg.mode = mode_from_string(string_field(doc.at("mode"), "mode"));
    }
    if (doc.contains("method")) {
        cfg.method = method_from_string(string_field(doc.at("method"), "method"));
    }
    if (doc.contains("model")) {
        cfg.render_model = model_from_string(string_field(doc.at("model"), "model"), "model");
    }
    if (doc.contains("reprojection_model")) {
        cfg.reprojection_model =
            model_from_string(string_field(doc.at("reprojection_model"), "reprojection_model"), "reprojection_model");
    }
    if (doc.contains("projection")) {
        const std::string p = string_field(doc.at("projection"), "projection");
        if (p == "perspective") {
            cfg.scene.projection = Projection::Perspective;
        } else if (p == "orthographic") {
            cfg.scene.projection = Projection::Orthographic;
        } else {
            field_error("projection", "expected \"perspective\" or \"orthographic\"");
        }
    }

    if (!doc.contains("camera")) {
        field_error("camera", "missing");
    }
    {
        const json& cam = doc.at("camera");
        if (!cam.is_object()) {
            field_error("camera", "expected an object");
        }
        CameraIntrinsics& intr = cfg.scene.intrinsics;
        intr.focal = number_or(cam, "focal", "camera.", 1.0);
        if (cam.contains("pitch")) {
            const auto pp = pair(cam.at("pitch"), "camera.pitch");
            intr.pitch_x = pp[0];
            intr.pitch_y = pp[1];
        }
        if (!cam.contains("width") || !cam.contains("height")) {
            field_error(cam.contains("width") ? "camera.height" : "camera.width", "missing");
        }
        cfg.scene.width = static_cast<int>(number(cam.at("width"), "camera.width"));
        cfg.scene.height = static_cast<int>(number(cam.at("height"), "camera.height"));
        if (cam.contains("principal_point")) {
            const auto pp = pair(cam.at("principal_point"), "camera.principal_point");
            intr.principal_x = pp[0];
            intr.principal_y = pp[1];
        } else {
            intr.principal_x = 0.5 * (cfg.scene.width - 1);
            intr.principal_y = 0.5 * (cfg.scene.height - 1);
        }
    }

    if (doc.contains("material")) {
        const json& m = doc.at("material");
        if (!m.is_object()) {
            field_error("material", "expected an object");
        }
        cfg.has_material = true;
        cfg.scene.material.kd = number_or(m, "kd", "material.", 1.0);
        cfg.scene.material.ks = number_or(m, "ks", "material.", 0.0);
        cfg.scene.material.shininess = number_or(m, "shininess", "material.", 1.0);
    }

    if (!doc.contains("lights")) {
        field_error("lights", "missing");
    }
    {
        const json& lights = doc.at("lights");
        if (!lights.is_array() || lights.size() != 3) {
            field_error("lights", "expected exactly 3 light sources");
        }
        for (std::size_t k = 0; k < 3; ++k) {
            const json& l = lights[k];
            const std::string prefix = "lights[" + std::to_string(k) + "].";
            if (!l.is_object() || !l.contains("direction")) {
                field_error(prefix + "direction", "missing");
            }
            LightSource& src = cfg.scene.lights[k];
            src.direction = vec3(l.at("direction"), prefix + "direction");
            src.diffuse_intensity = number_or(l, "diffuse", prefix, 1.0);
            src.specular_intensity = number_or(l, "specular", prefix, 1.0);
        }
    }

    if (doc.contains("scene")) {
        const json& s = doc.at("scene");
        const std::string type = s.contains("type") ? string_field(s.at("type"), "scene.type") : "sphere";
        if (type == "sphere") {
            cfg.scene.source = SceneSpec::Source::Sphere;
            if (s.contains("center")) {
                cfg.scene.center = vec3(s.at("center"), "scene.center");
            }
            cfg.scene.radius = number_or(s, "radius", "scene.", 1.0);
        } else if (type == "depth") {
            cfg.scene.source = SceneSpec::Source::DepthMap;
            if (!s.contains("path")) {
                field_error("scene.path", "missing");
            }
            const fs::path p = resolve(base_dir, string_field(s.at("path"), "scene.path"));
            try {
                cfg.scene.depth = io::read_depth(p);
            } catch (const ValidationError& e) {
                field_error("scene.path", e.what());
            } catch (const std::runtime_error& e) {
                field_error("scene.path", e.what());
            }
        } else {
            field_error("scene.type", "expected \"sphere\" or \"depth\"");
        }
    } else if (cfg.mode == Mode::Render) {
        field_error("scene", "missing (required for render)");
    }

    if (doc.contains("images")) {
        const json& imgs = doc.at("images");
        if (!imgs.is_array()) {
            field_error("images", "expected an array of paths");
        }
        for (std::size_t k = 0; k < imgs.size(); ++k) {
            cfg.images.push_back(resolve(base_dir, string_field(imgs[k], "images")));
        }
    }
    if (doc.contains("ground_truth")) {
        cfg.ground_truth = resolve(base_dir, string_field(doc.at("ground_truth"), "ground_truth"));
    }
    if (doc.contains("reconstruction")) {
        cfg.reconstruction_dir = resolve(base_dir, string_field(doc.at("reconstruction"), "reconstruction"));
    }
    if (doc.contains("centerize")) {
        if (!doc.at("centerize").is_boolean()) {
            field_error("centerize", "expected a boolean");
        }
        cfg.centerize = doc.at("centerize").get<bool>();
    }
    cfg.full_scale = number_or(doc, "full_scale", "", 1.0);
    cfg.pgm_maxval = static_cast<int>(number_or(doc, "pgm_maxval", "", 65535));
    if (doc.contains("output")) {
        cfg.output = resolve(base_dir, string_field(doc.at("output"), "output"));
    } else {
        cfg.output = resolve(base_dir, "out");
    }
    if (doc.contains("lm")) {
        const json& lm = doc.at("lm");
        cfg.lm.lambda0 = number_or(lm, "lambda0", "lm.", cfg.lm.lambda0);
        cfg.lm.lambda_up = number_or(lm, "lambda_up", "lm.", cfg.lm.lambda_up);
        cfg.lm.lambda_down = number_or(lm, "lambda_down", "lm.", cfg.lm.lambda_down);
        cfg.lm.max_iter = static_cast<int>(number_or(lm, "max_iter", "lm.", cfg.lm.max_iter));
        cfg.lm.step_tol = number_or(lm, "step_tol", "lm.", cfg.lm.step_tol);
        cfg.lm.residual_tol = number_or(lm, "residual_tol", "lm.", cfg.lm.residual_tol);
    }
    if (doc.contains("integration")) {
        const json& in = doc.at("integration");
        if (in.contains("solver")) {
            cfg.integration_solver = solver_from_string(string_field(in.at("solver"), "integration.solver"));
        }
    }
    return cfg;
}

PipelineConfig PipelineConfig::load(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot read config " + path.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return from_json(doc, path.parent_path());
}

void PipelineConfig::validate() const
{
    try {
        scene.intrinsics.validate();
    } catch (const ValidationError& e) {
        field_error("camera", e.what());
    }
    if (scene.width <= 0 || scene.height <= 0) {
        field_error("camera.width", "image size must be positive");
    }
    for (std::size_t k = 0; k < 3; ++k) {
        const std::string field = "lights[" + std::to_string(k) + "]";
        // The conditioning map is meant to diagnose bad rigs, grazing ones included.
        if (mode == Mode::Conditioning) {
            const Vec3& d = scene.lights[k].direction;
            if (!d.allFinite() || d.norm() == 0.0) {
                field_error(field + ".direction", "must be finite and nonzero");
            }
            continue;
        }
        try {
            scene.lights[k].validate();
        } catch (const ValidationError& e) {
            field_error(field, e.what());
        }
    }
    if (has_material) {
        try {
            scene.material.validate();
        } catch (const ValidationError& e) {
            field_error("material", e.what());
        }
    }
    try {
        lm.validate();
    } catch (const ValidationError& e) {
        field_error("lm", e.what());
    }
    if (!(full_scale > 0.0) || !std::isfinite(full_scale)) {
        field_error("full_scale", "must be positive");
    }
    if (pgm_maxval < 1 || pgm_maxval > 65535) {
        field_error("pgm_maxval", "must lie in [1, 65535]");
    }

    switch (mode) {
    case Mode::Render:
        if (!has_material) {
            field_error("material", "required for render");
        }
        try {
            scene.validate();
        } catch (const ValidationError& e) {
            field_error("scene", e.what());
        }
        break;
    case Mode::Reconstruct:
    case Mode::Evaluate:
        if (images.size() != 3) {
            field_error("images", "expected exactly 3 image paths, got " + std::to_string(images.size()));
        }
        if (is_blinn_phong(method) && !has_material) {
            field_error("material", "required for method " + to_string(method));
        }
        break;
    case Mode::Conditioning:
        break;
    }
}

// ---------------------------------------------------------------------------

Mask largest_component(const Mask& mask)
{
    const int w = mask.width();
    const int h = mask.height();
    Grid<int> label(w, h, -1);
    int best = -1;
    std::size_t best_size = 0;
    int next = 0;
    std::queue<std::pair<int, int>> todo;
    for (int j = 0; j < h; ++j) {
        for (int i = 0; i < w; ++i) {
            if (!mask(i, j) || label(i, j) >= 0) {
                continue;
            }
            const int id = next++;
            std::size_t size = 0;
            label(i, j) = id;
            todo.emplace(i, j);
            while (!todo.empty()) {
                const auto [ci, cj] = todo.front();
                todo.pop();
                ++size;
                const int di[4] = {1, -1, 0, 0};
                const int dj[4] = {0, 0, 1, -1};
                for (int k = 0; k < 4; ++k) {
                    const int ni = ci + di[k];
                    const int nj = cj + dj[k];
                    if (ni >= 0 && nj >= 0 && ni < w && nj < h && mask(ni, nj) && label(ni, nj) < 0) {
                        label(ni, nj) = id;
                        todo.emplace(ni, nj);
                    }
                }
            }
            if (size > best_size) {
                best_size = size;
                best = id;
            }
        }
    }
    Mask out(w, h, 0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = (best >= 0 && label[i] == best) ? 1 : 0;
    }
    return out;
}

Reconstruction reconstruct(const Images& images, const Lights& lights, const Material& material,
                           const CameraIntrinsics& intr, Method method, const ReconstructOptions& opts)
{
    const CameraIntrinsics camera = opts.centerize ? intr : intr.uncentered();
    camera.validate();
    Reconstruction out;
    out.method = method;
    const Mask input = valid_input_mask(images);

    auto t0 = std::chrono::steady_clock::now();
    switch (method) {
    case Method::LambertPPS: {
        ClosedFormResult cf = lambertian_pps_closed_form(images, lights, camera);
        out.gradient = std::move(cf.gradient);
        out.albedo = std::move(cf.albedo);
        out.stats.unsolvable = cf.singular;
        break;
    }
    case Method::BlinnPhongPPS: {
        PerspectiveSolveResult r = blinn_phong_pps_solve(images, lights, material, camera, opts.lm);
        out.gradient = std::move(r.gradient);
        out.stats = r.stats;
        break;
    }
    case Method::LambertPPN: {
        WoodhamResult r = woodham_normals(images, lights);
        r.normals.mask = mask_and(r.normals.mask, input);
        out.albedo = std::move(r.albedo);
        out.normals = std::move(r.normals);
        break;
    }
    case Method::BlinnPhongPPN: {
        OrthographicSolveResult r = blinn_phong_ortho_solve(images, lights, material, opts.lm);
        out.normals = std::move(r.normals);
        out.stats = r.stats;
        break;
    }
    }
    if (out.normals) {
        GradientConversion conv = normals_to_perspective_gradient(*out.normals, camera);
        out.gradient = std::move(conv.field);
        out.degenerate = conv.degenerate;
    }
    out.gradient.mask = largest_component(mask_and(out.gradient.mask, input));
    out.gradient.normalize_masked();
    if (!is_blinn_phong(method)) {
        out.stats.input_masked = out.gradient.mask.size() - count_valid(input);
    }
    out.stats.solved = count_valid(out.gradient.mask);
    out.timings["solve"] = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    if (count_valid(out.gradient.mask) == 0) {
        throw NumericalError("reconstruct: no pixel could be solved");
    }
    IntegrationConfig icfg;
    icfg.solver = opts.integration_solver;
    icfg.spacing_x = camera.pitch_x;
    icfg.spacing_y = camera.pitch_y;
    const RealGrid nu = poisson_integrate(out.gradient, icfg);
    out.depth = exp_depth(nu, out.gradient.mask);
    out.timings["integrate"] = seconds_since(t0);
    return out;
}

std::array<double, 3> reprojection_error(const GradientField& grad, const Images& images, const Lights& lights,
                                         const Material& m, const CameraIntrinsics& intr, ReflectanceModel model)
{
    std::array<double, 3> out{};
    for (int k = 0; k < 3; ++k) {
        if (images[k].width() != grad.width() || images[k].height() != grad.height()) {
            throw ValidationError("reprojection_error: dimension mismatch");
        }
        const Image rendered = model == ReflectanceModel::Lambertian
                                   ? render_lambertian_perspective(grad, lights[k], m, intr)
                                   : render_blinn_phong_perspective(grad, lights[k], m, intr);
        out[k] = mse(rendered.data, images[k].data, grad.mask);
    }
    return out;
}

nlohmann::json EvaluationReport::to_json() const
{
    json j;
    j["mse_raw"] = mse_raw ? json(*mse_raw) : json(nullptr);
    j["mse_normalized"] = mse_normalized ? json(*mse_normalized) : json(nullptr);
    j["mse_reprojection"] = mse_reprojection;
    j["pixels"] = pixels;
    j["valid_pixels"] = valid_pixels;
    j["masked_pixels"] = masked_pixels;
    j["solve"] = stats_json(stats);
    return j;
}

EvaluationReport evaluate(const Reconstruction& recon, const Images& images, const Lights& lights,
                          const Material& m, const CameraIntrinsics& intr, const DepthMap* ground_truth,
                          ReflectanceModel reprojection_model)
{
    EvaluationReport report;
    report.pixels = recon.gradient.mask.size();
    report.valid_pixels = count_valid(recon.gradient.mask);
    report.masked_pixels = report.pixels - report.valid_pixels;
    report.stats = recon.stats;
    report.timings = recon.timings;
    const auto t0 = std::chrono::steady_clock::now();
    report.mse_reprojection = reprojection_error(recon.gradient, images, lights, m, intr, reprojection_model);
    if (ground_truth) {
        const AlignedDepth a = align_depth(recon.depth, *ground_truth);
        report.mse_raw = a.mse_raw;
        report.mse_normalized = a.mse_normalized;
    }
    report.timings["evaluate"] = seconds_since(t0);
    return report;
}

// ---------------------------------------------------------------------------

namespace {

Images load_images(const PipelineConfig& cfg)
{
    Images images;
    for (std::size_t k = 0; k < 3; ++k) {
        images[k] = io::read_pgm(cfg.images[k], cfg.full_scale);
        if (images[k].width() != cfg.scene.width || images[k].height() != cfg.scene.height) {
            field_error("images", cfg.images[k].string() + " does not match the camera size");
        }
    }
    return images;
}

void write_timings(const fs::path& dir, const std::map<std::string, double>& timings)
{
    write_json(dir / "timings.json", json(timings));
}

EvaluationReport run_render(const PipelineConfig& cfg)
{
    const auto t0 = std::chrono::steady_clock::now();
    SceneSpec scene = cfg.scene;
    if (!cfg.centerize) {
        scene.intrinsics = scene.intrinsics.uncentered();
    }
    const RenderedScene r = render_scene(scene, cfg.render_model);
    EvaluationReport report;
    report.timings["render"] = seconds_since(t0);
    for (int k = 0; k < 3; ++k) {
        io::write_pgm(cfg.output / ("image_" + std::to_string(k + 1) + ".pgm"), r.images[k], cfg.full_scale,
                      cfg.pgm_maxval);
    }
    io::write_depth(cfg.output / "depth_gt.pfm", r.depth);
    report.pixels = r.depth.mask.size();
    report.valid_pixels = count_valid(r.depth.mask);
    report.masked_pixels = report.pixels - report.valid_pixels;
    write_timings(cfg.output, report.timings);
    return report;
}

EvaluationReport run_reconstruct(const PipelineConfig& cfg)
{
    const Images images = load_images(cfg);
    ReconstructOptions opts{cfg.centerize, cfg.lm, cfg.integration_solver};
    const Reconstruction r =
        reconstruct(images, cfg.scene.lights, cfg.scene.material, cfg.scene.intrinsics, cfg.method, opts);
    io::write_gradient(cfg.output / "grad_x.pfm", cfg.output / "grad_y.pfm", r.gradient);
    io::write_depth(cfg.output / "depth.pfm", r.depth);
    if (r.normals) {
        io::write_normals_pfm(cfg.output / "normals.pfm", *r.normals);
    }
    if (r.albedo) {
        io::write_pfm(cfg.output / "albedo.pfm", *r.albedo, r.gradient.mask);
    }
    EvaluationReport report;
    report.pixels = r.gradient.mask.size();
    report.valid_pixels = count_valid(r.gradient.mask);
    report.masked_pixels = report.pixels - report.valid_pixels;
    report.stats = r.stats;
    report.timings = r.timings;
    json doc = {{"method", to_string(cfg.method)},
                {"centerize", cfg.centerize},
                {"pixels", report.pixels},
                {"valid_pixels", report.valid_pixels},
                {"masked_pixels", report.masked_pixels},
                {"degenerate_normals", r.degenerate},
                {"solve", stats_json(r.stats)}};
    write_json(cfg.output / "reconstruction.json", doc);
    write_timings(cfg.output, report.timings);
    return report;
}

EvaluationReport run_evaluate(const PipelineConfig& cfg)
{
    const Images images = load_images(cfg);
    const fs::path dir = cfg.reconstruction_dir.value_or(cfg.output);
    Reconstruction r;
    r.method = cfg.method;
    r.gradient = io::read_gradient(dir / "grad_x.pfm", dir / "grad_y.pfm", GradientKind::LogDepth);
    r.depth = io::read_depth(dir / "depth.pfm");
    if (!r.gradient.gx.same_shape(images[0].data) || !r.depth.z.same_shape(images[0].data)) {
        throw ValidationError("reconstruction artifacts do not match the input image size");
    }
    std::optional<DepthMap> gt;
    if (cfg.ground_truth) {
        gt = io::read_depth(*cfg.ground_truth);
    }
    const CameraIntrinsics camera = cfg.centerize ? cfg.scene.intrinsics : cfg.scene.intrinsics.uncentered();
    EvaluationReport report = evaluate(r, images, cfg.scene.lights, cfg.scene.material, camera,
                                       gt ? &*gt : nullptr, cfg.reprojection_model);
    json doc = report.to_json();
    doc["method"] = to_string(cfg.method);
    doc.erase("solve");
    write_json(cfg.output / "report.json", doc);
    write_timings(cfg.output, report.timings);
    return report;
}

EvaluationReport run_conditioning(const PipelineConfig& cfg)
{
    const auto t0 = std::chrono::steady_clock::now();
    const CameraIntrinsics camera = cfg.centerize ? cfg.scene.intrinsics : cfg.scene.intrinsics.uncentered();
    const ConditioningReport c = sensitivity_indicator(cfg.scene.lights, cfg.scene.width, cfg.scene.height, camera);
    for (int e = 0; e < kIndicatorCount; ++e) {
        char name[32];
        std::snprintf(name, sizeof name, "indicator_%02d.pgm", e + 1);
        io::write_mask_pgm(cfg.output / name, c.violated[e]);
    }
    io::write_pfm(cfg.output / "det_m.pfm", c.det_m);
    const auto counts = c.violation_counts();
    json doc = {{"lights_non_coplanar", c.lights_non_coplanar},
                {"violations", counts},
                {"pixels", static_cast<std::size_t>(cfg.scene.width) * cfg.scene.height}};
    write_json(cfg.output / "conditioning.json", doc);
    EvaluationReport report;
    report.pixels = c.det_m.size();
    report.timings["conditioning"] = seconds_since(t0);
    write_timings(cfg.output, report.timings);
    return report;
}

} // namespace

EvaluationReport run_pipeline(const PipelineConfig& cfg)
{
    cfg.validate();
    std::error_code ec;
    fs::create_directories(cfg.output, ec);
    if (ec) {
        throw std::runtime_error("cannot create output directory " + cfg.output.string() + ": " + ec.message());
    }
    switch (cfg.mode) {
    case Mode::Render:
        return run_render(cfg);
    case Mode::Reconstruct:
        return run_reconstruct(cfg);
    case Mode::Evaluate:
        return run_evaluate(cfg);
    case Mode::Conditioning:
        return run_conditioning(cfg);
    }
    return {};
}

} // namespace psbp
