#pragma once

#include "upiv/flow_field.hpp"
#include "upiv/image.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace upiv {

// ---------------------------------------------------------------------------
// Analytic flow models (pixels/frame)
// ---------------------------------------------------------------------------

struct UniformFlow {
    double u = 0.0;
    double v = 0.0;
};

// u = u0 + rate * (y - y_ref), v = 0
struct ShearFlow {
    double u0 = 0.0;
    double rate = 0.0;  // du/dy, 1/frame
    double y_ref = 0.0;
};

// Rankine vortex, counter-clockwise in image coordinates (y down): solid-body
// rotation inside the core, 1/r decay outside. Tangential speed peaks at
// core_radius.
struct VortexFlow {
    double cx = 0.0;
    double cy = 0.0;
    double peak_speed = 1.0;
    double core_radius = 10.0;
};

using FlowComponent = std::variant<UniformFlow, ShearFlow, VortexFlow>;

enum class FlowKind { uniform, shear, vortex, composite };

struct FlowModel {
    std::vector<FlowComponent> components;  // velocities add

    FlowKind kind() const;
    Vec2 velocity(double x, double y) const;
    void validate() const;

    static FlowModel uniform(double u, double v) { return {{UniformFlow{u, v}}}; }
};

// ---------------------------------------------------------------------------
// Scene specification
// ---------------------------------------------------------------------------

/// Particle scene. Positions are in pixel units with pixel centres on integer
/// coordinates. Randomness comes from std::mt19937_64, whose output sequence
/// is fixed by the C++ standard; uniform and normal variates are derived from
/// raw 64-bit draws by the documented transforms in synth.cpp, never from
/// std:: distributions, so sequences are reproducible across toolchains.
struct SceneSpec {
    int width = 320;
    int height = 240;
    double particle_density = 0.012;   // particles per pixel
    double particle_radius = 3.0;      // Gaussian sigma, pixels
    double particle_intensity = 1.0;   // blob peak before clamping
    double out_of_plane_rate = 0.005;  // replacement probability per particle per frame
    double noise_sigma = 0.0;          // additive Gaussian noise, normalized intensity
    int frames = 2;
    std::uint64_t seed = 1;
    // Optional explicit initial positions; when non-empty they replace the
    // random draw and no margin particles are added.
    std::vector<Vec2> particles;

    void validate() const;
};

struct SequenceStats {
    std::size_t particles = 0;
    std::size_t transitions = 0;   // particle-frame steps taken
    std::size_t replacements = 0;  // out-of-plane replacements applied
};

struct Sequence {
    std::vector<ImageFrame> frames;
    std::vector<FlowField> truth;  // truth[i] maps frames[i] -> frames[i+1]
    SequenceStats stats;
};

Sequence generate_sequence(const SceneSpec& spec, const FlowModel& model);

// Fraction of pixels above 0.9 in the first rendered frame before noise.
double density_to_saturation(const SceneSpec& spec);

// Analytic field sampled at every pixel centre; all pixels valid.
FlowField sample_flow(const FlowModel& model, int width, int height);

// Random number source used by the generator.
class SceneRng {
public:
    explicit SceneRng(std::uint64_t seed) : engine_(seed) {}

    // Top 53 bits of one draw scaled to [0, 1).
    double uniform();
    // Box-Muller from two uniform draws, cosine branch only.
    double normal();

private:
    std::mt19937_64 engine_;
};

inline constexpr const char* kSceneRngName = "mt19937_64";

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

// Imaging at 32 px/cm and 60 frames/s turns a stream speed in cm/s into a
// displacement of speed * 32 / 60 px/frame.
double stream_speed_to_pixels(double cm_per_s);

// About 29% of pixels exceed 0.9 at this density with the default radius.
inline constexpr double kSaturationDensity = 0.012;

struct ScenePreset {
    std::string name;
    SceneSpec scene;
    FlowModel model;
};

// Names: "fast" (35 cm/s uniform stream), "medium" (25 cm/s stream with a
// superimposed vortex), "uniform", "shear", "vortex", "static".
ScenePreset scene_preset(std::string_view name);
std::vector<std::string> scene_preset_names();

}  // namespace upiv
