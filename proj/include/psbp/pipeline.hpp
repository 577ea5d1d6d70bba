#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "psbp/core.hpp"
#include "psbp/integrate.hpp"
#include "psbp/optim.hpp"
#include "psbp/render.hpp"
#include "psbp/solve.hpp"

namespace psbp {

enum class Mode { Render, Reconstruct, Evaluate, Conditioning };
enum class Method { LambertPPN, LambertPPS, BlinnPhongPPN, BlinnPhongPPS };

std::string to_string(Method method);
Method method_from_string(const std::string& s);
std::string to_string(Mode mode);
Mode mode_from_string(const std::string& s);

/// Everything a pipeline invocation needs. Relative paths in the JSON
/// document resolve against the directory holding it.
struct PipelineConfig {
    Mode mode = Mode::Render;
    Method method = Method::BlinnPhongPPS;
    SceneSpec scene;  ///< camera, material and lights are read from here in every mode
    bool has_material = false;
    ReflectanceModel render_model = ReflectanceModel::BlinnPhong;
    ReflectanceModel reprojection_model = ReflectanceModel::Lambertian;
    std::vector<std::filesystem::path> images;
    std::optional<std::filesystem::path> ground_truth;
    std::optional<std::filesystem::path> reconstruction_dir;
    bool centerize = true;
    double full_scale = 1.0;
    int pgm_maxval = 65535;
    std::filesystem::path output = "out";
    LMConfig lm;
    IntegrationSolver integration_solver = IntegrationSolver::Automatic;

    /// Throws ValidationError naming the offending field.
    static PipelineConfig from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
    static PipelineConfig load(const std::filesystem::path& path);

    void validate() const;
};

struct ReconstructOptions {
    bool centerize = true;
    LMConfig lm;
    IntegrationSolver integration_solver = IntegrationSolver::Automatic;
};

struct Reconstruction {
    Method method = Method::BlinnPhongPPS;
    GradientField gradient;  ///< log-depth
    std::optional<NormalField> normals;
    std::optional<AlbedoMap> albedo;
    DepthMap depth;  ///< up to global scale
    SolveStats stats;
    std::size_t degenerate = 0;
    std::map<std::string, double> timings;
};

/// Largest 4-connected region of a mask.
Mask largest_component(const Mask& mask);

/// Runs one method end to end: per-pixel solve, normal conversion for the
/// PPN variants, Poisson integration and exponentiation.
Reconstruction reconstruct(const Images& images, const Lights& lights, const Material& material,
                           const CameraIntrinsics& intr, Method method, const ReconstructOptions& opts = {});

/// Per-image MSE between `images` and a re-rendering from `grad`.
std::array<double, 3> reprojection_error(const GradientField& grad, const Images& images, const Lights& lights,
                                         const Material& m, const CameraIntrinsics& intr, ReflectanceModel model);

struct EvaluationReport {
    std::optional<double> mse_raw;
    std::optional<double> mse_normalized;
    std::array<double, 3> mse_reprojection{};
    std::size_t pixels = 0;
    std::size_t valid_pixels = 0;
    std::size_t masked_pixels = 0;
    SolveStats stats;
    std::map<std::string, double> timings;

    /// Deterministic fields only; timings are written separately.
    nlohmann::json to_json() const;
};

EvaluationReport evaluate(const Reconstruction& recon, const Images& images, const Lights& lights,
                          const Material& m, const CameraIntrinsics& intr, const DepthMap* ground_truth,
                          ReflectanceModel reprojection_model = ReflectanceModel::Lambertian);

/// Executes the configured mode and writes its artifacts under cfg.output.
EvaluationReport run_pipeline(const PipelineConfig& cfg);

} // namespace psbp
