#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "qis/hdr.hpp"
#include "qis/image_types.hpp"
#include "qis/metrics.hpp"
#include "qis/sensor.hpp"

namespace qis::io {

/// Malformed input file; byte_offset points at the offending position.
struct ParseError : std::runtime_error {
    ParseError(const std::string& path, std::size_t offset, const std::string& what);
    std::size_t byte_offset = 0;
};

/// Reads a scene. Binary PGM (P5, 8- or 16-bit) is mapped linearly so the
/// format maxval corresponds to c_max photons/second; a QISF float file is
/// taken verbatim.
sensor::PhotonFluxMap read_scene(const std::string& path, double c_max = 6e6);

/// QISF container: magic "QISF", u32-le width, u32-le height, then
/// width*height f64-le values row-major.
void write_flux(const std::string& path, const RealImage& image);
void write_flux(const std::string& path, const hdr::HdrEstimate& estimate);
void write_sum(const std::string& path, const sensor::SumImage& image);
RealImage read_flux(const std::string& path);

/// 8-bit binary PGM, maxval 255.
void write_display(const std::string& path, const DisplayImage& image);
DisplayImage read_display(const std::string& path);

/// Header "theta,<label1>,..." then one row per axis point, 9 significant
/// digits, "." decimal separator, "\n" line endings. NaN sentinels print as
/// "nan".
void write_csv(const std::string& path, const metrics::SnrCurve& curve);

/// Flat key=value sidecar capturing the exposure parameters of a capture.
void write_exposure_sidecar(const std::string& path, const sensor::ExposureConfig& config);
sensor::ExposureConfig read_exposure_sidecar(const std::string& path);

/// End-to-end run description (flat key=value file, exposures indexed as
/// exposure.N.tau etc).
struct RunConfig {
    std::string scene_path;
    double c_max = 6e6;
    std::uint64_t seed = 0;
    std::vector<sensor::ExposureConfig> exposures;
    hdr::FusionConfig fusion;
    double tone_gamma = 2.2;
    std::string flux_out;
    std::string display_out;

    void validate() const;
};

void write_run_config(const std::string& path, const RunConfig& config);
RunConfig read_run_config(const std::string& path);

} // namespace qis::io
