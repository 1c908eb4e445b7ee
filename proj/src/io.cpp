#include "qis/io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <system_error>

namespace qis::io {
namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (!in.good() && !in.eof()) throw std::runtime_error("read failure on " + path);
    return data;
}

void write_file(const std::string& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out.good()) throw std::runtime_error("write failure on " + path);
}

void append_u32le(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
    out.push_back(static_cast<char>((v >> 16) & 0xFF));
    out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void append_f64le(std::string& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof bits);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

std::uint32_t load_u32le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

double load_f64le(const unsigned char* p) {
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) bits = (bits << 8) | p[i];
    double d;
    std::memcpy(&d, &bits, sizeof d);
    return d;
}

// Shortest round-trip representation for config files.
std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

// 9 significant digits for CSV values; NaN prints as "nan".
std::string format_csv_value(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 9);
    return std::string(buf, res.ptr);
}

struct PgmHeader {
    int width = 0;
    int height = 0;
    int maxval = 0;
    std::size_t data_offset = 0;
};

// P5 header parse; '#' comments are tolerated between tokens.
PgmHeader parse_pgm_header(const std::string& path, const std::string& data) {
    std::size_t pos = 0;
    const auto fail = [&](const std::string& what) -> ParseError {
        return ParseError(path, pos, what);
    };
    const auto skip_space = [&] {
        for (;;) {
            while (pos < data.size() && std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
            if (pos < data.size() && data[pos] == '#') {
                while (pos < data.size() && data[pos] != '\n') ++pos;
                continue;
            }
            break;
        }
    };
    const auto read_int = [&]() -> int {
        skip_space();
        if (pos >= data.size() || !std::isdigit(static_cast<unsigned char>(data[pos]))) {
            throw fail("expected integer");
        }
        long v = 0;
        while (pos < data.size() && std::isdigit(static_cast<unsigned char>(data[pos]))) {
            v = v * 10 + (data[pos] - '0');
            if (v > 1000000000L) throw fail("integer out of range");
            ++pos;
        }
        return static_cast<int>(v);
    };

    if (data.size() < 2 || data[0] != 'P' || data[1] != '5') throw fail("not a binary PGM (P5)");
    pos = 2;
    PgmHeader h;
    h.width = read_int();
    h.height = read_int();
    h.maxval = read_int();
    if (h.width < 1 || h.height < 1) throw fail("invalid dimensions");
    if (h.maxval < 1 || h.maxval > 65535) throw fail("maxval out of range");
    if (pos >= data.size() || !std::isspace(static_cast<unsigned char>(data[pos]))) {
        throw fail("expected single whitespace before raster");
    }
    ++pos;
    h.data_offset = pos;
    return h;
}

std::map<std::string, std::string> parse_key_values(const std::string& path, const std::string& data) {
    std::map<std::string, std::string> kv;
    std::size_t pos = 0;
    std::size_t line_start = 0;
    while (line_start < data.size()) {
        std::size_t line_end = data.find('\n', line_start);
        if (line_end == std::string::npos) line_end = data.size();
        const std::string line = data.substr(line_start, line_end - line_start);
        pos = line_start;
        if (!line.empty() && line[0] != '#') {
            const std::size_t eq = line.find('=');
            if (eq == std::string::npos) throw ParseError(path, pos, "expected key=value");
            kv[line.substr(0, eq)] = line.substr(eq + 1);
        }
        line_start = line_end + 1;
    }
    return kv;
}

double parse_double_field(const std::string& path, const std::map<std::string, std::string>& kv,
                          const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw ParseError(path, 0, "missing key " + key);
    double v = 0.0;
    const char* b = it->second.data();
    const char* e = b + it->second.size();
    const auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc() || res.ptr != e) throw ParseError(path, 0, "bad value for " + key);
    return v;
}

std::uint64_t parse_u64_field(const std::string& path, const std::map<std::string, std::string>& kv,
                              const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw ParseError(path, 0, "missing key " + key);
    std::uint64_t v = 0;
    const char* b = it->second.data();
    const char* e = b + it->second.size();
    const auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc() || res.ptr != e) throw ParseError(path, 0, "bad value for " + key);
    return v;
}

std::string qisf_payload(int width, int height, const double* values) {
    std::string out;
    const std::size_t count = static_cast<std::size_t>(width) * height;
    out.reserve(12 + 8 * count);
    out += "QISF";
    append_u32le(out, static_cast<std::uint32_t>(width));
    append_u32le(out, static_cast<std::uint32_t>(height));
    for (std::size_t i = 0; i < count; ++i) append_f64le(out, values[i]);
    return out;
}

RealImage parse_qisf(const std::string& path, const std::string& data) {
    if (data.size() < 12 || std::memcmp(data.data(), "QISF", 4) != 0) {
        throw ParseError(path, 0, "missing QISF magic");
    }
    const unsigned char* p = reinterpret_cast<const unsigned char*>(data.data());
    const std::uint32_t w = load_u32le(p + 4);
    const std::uint32_t h = load_u32le(p + 8);
    if (w < 1 || h < 1 || w > 1000000 || h > 1000000) throw ParseError(path, 4, "invalid dimensions");
    const std::size_t count = static_cast<std::size_t>(w) * h;
    const std::size_t expected = 12 + 8 * count;
    if (data.size() < expected) throw ParseError(path, data.size(), "truncated payload");
    if (data.size() > expected) throw ParseError(path, expected, "trailing bytes");

    RealImage img;
    img.width = static_cast<int>(w);
    img.height = static_cast<int>(h);
    img.values.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        img.values[i] = load_f64le(p + 12 + 8 * i);
    }
    return img;
}

} // namespace

ParseError::ParseError(const std::string& path, std::size_t offset, const std::string& what)
    : std::runtime_error(path + ": " + what + " (byte offset " + std::to_string(offset) + ")"),
      byte_offset(offset) {}

sensor::PhotonFluxMap read_scene(const std::string& path, double c_max) {
    if (!(c_max > 0.0) || !std::isfinite(c_max)) {
        throw std::domain_error("read_scene: c_max must be finite and > 0");
    }
    const std::string data = read_file(path);

    sensor::PhotonFluxMap scene;
    if (data.size() >= 4 && std::memcmp(data.data(), "QISF", 4) == 0) {
        RealImage img = parse_qisf(path, data);
        scene.width = img.width;
        scene.height = img.height;
        scene.flux = std::move(img.values);
        for (std::size_t i = 0; i < scene.flux.size(); ++i) {
            if (!std::isfinite(scene.flux[i]) || scene.flux[i] < 0.0) {
                throw ParseError(path, 12 + 8 * i, "non-finite or negative flux");
            }
        }
        return scene;
    }

    const PgmHeader h = parse_pgm_header(path, data);
    const int bytes_per = h.maxval > 255 ? 2 : 1;
    const std::size_t count = static_cast<std::size_t>(h.width) * h.height;
    const std::size_t expected = h.data_offset + count * bytes_per;
    if (data.size() < expected) throw ParseError(path, data.size(), "truncated raster");
    if (data.size() > expected) throw ParseError(path, expected, "trailing bytes");

    scene.width = h.width;
    scene.height = h.height;
    scene.flux.resize(count);
    const unsigned char* p = reinterpret_cast<const unsigned char*>(data.data()) + h.data_offset;
    const double maxval = static_cast<double>(h.maxval);
    for (std::size_t i = 0; i < count; ++i) {
        const unsigned v = bytes_per == 1
                               ? p[i]
                               : (static_cast<unsigned>(p[2 * i]) << 8) | p[2 * i + 1]; // big-endian
        scene.flux[i] = static_cast<double>(v) / maxval * c_max;
    }
    return scene;
}

void write_flux(const std::string& path, const RealImage& image) {
    write_file(path, qisf_payload(image.width, image.height, image.values.data()));
}

void write_flux(const std::string& path, const hdr::HdrEstimate& estimate) {
    write_file(path, qisf_payload(estimate.width, estimate.height, estimate.flux_hat.data()));
}

void write_sum(const std::string& path, const sensor::SumImage& image) {
    std::vector<double> values(image.sum.size());
    for (std::size_t i = 0; i < image.sum.size(); ++i) values[i] = static_cast<double>(image.sum[i]);
    write_file(path, qisf_payload(image.width, image.height, values.data()));
}

RealImage read_flux(const std::string& path) {
    return parse_qisf(path, read_file(path));
}

void write_display(const std::string& path, const DisplayImage& image) {
    std::string out = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(image.pixels.data()), image.pixels.size());
    write_file(path, out);
}

DisplayImage read_display(const std::string& path) {
    const std::string data = read_file(path);
    const PgmHeader h = parse_pgm_header(path, data);
    if (h.maxval != 255) throw ParseError(path, 0, "expected 8-bit PGM with maxval 255");
    const std::size_t count = static_cast<std::size_t>(h.width) * h.height;
    const std::size_t expected = h.data_offset + count;
    if (data.size() < expected) throw ParseError(path, data.size(), "truncated raster");
    if (data.size() > expected) throw ParseError(path, expected, "trailing bytes");

    DisplayImage img;
    img.width = h.width;
    img.height = h.height;
    img.pixels.assign(data.begin() + static_cast<std::ptrdiff_t>(h.data_offset),
                      data.begin() + static_cast<std::ptrdiff_t>(expected));
    return img;
}

void write_csv(const std::string& path, const metrics::SnrCurve& curve) {
    if (curve.rows.size() != curve.labels.size()) {
        throw std::invalid_argument("write_csv: label/row mismatch");
    }
    std::string out = "theta";
    for (const auto& label : curve.labels) {
        out += ",";
        out += label;
    }
    out += "\n";
    for (std::size_t i = 0; i < curve.theta_axis.size(); ++i) {
        out += format_csv_value(curve.theta_axis[i]);
        for (const auto& row : curve.rows) {
            out += ",";
            out += format_csv_value(row.at(i));
        }
        out += "\n";
    }
    write_file(path, out);
}

void write_exposure_sidecar(const std::string& path, const sensor::ExposureConfig& config) {
    std::string out;
    out += "tau=" + format_double(config.tau) + "\n";
    out += "capacity=" + std::to_string(config.capacity) + "\n";
    out += "frames=" + std::to_string(config.frames) + "\n";
    out += "oversample=" + std::to_string(config.oversample) + "\n";
    out += "seed=" + std::to_string(config.seed) + "\n";
    write_file(path, out);
}

sensor::ExposureConfig read_exposure_sidecar(const std::string& path) {
    const auto kv = parse_key_values(path, read_file(path));
    sensor::ExposureConfig config;
    config.tau = parse_double_field(path, kv, "tau");
    config.capacity = static_cast<int>(parse_u64_field(path, kv, "capacity"));
    config.frames = static_cast<long>(parse_u64_field(path, kv, "frames"));
    config.oversample = static_cast<int>(parse_u64_field(path, kv, "oversample"));
    config.seed = parse_u64_field(path, kv, "seed");
    if (kv.size() != 5) throw ParseError(path, 0, "unexpected keys in exposure sidecar");
    config.validate();
    return config;
}

void RunConfig::validate() const {
    if (scene_path.empty()) throw std::domain_error("RunConfig: scene path is empty");
    if (flux_out.empty() || display_out.empty()) throw std::domain_error("RunConfig: output paths are empty");
    if (!(c_max > 0.0)) throw std::domain_error("RunConfig: c_max must be > 0");
    if (!(tone_gamma > 0.0)) throw std::domain_error("RunConfig: tone_gamma must be > 0");
    if (exposures.empty()) throw std::domain_error("RunConfig: no exposures");
    for (const auto& e : exposures) e.validate();
    fusion.validate();
}

void write_run_config(const std::string& path, const RunConfig& config) {
    std::string out;
    out += "scene=" + config.scene_path + "\n";
    out += "cmax=" + format_double(config.c_max) + "\n";
    out += "seed=" + std::to_string(config.seed) + "\n";
    out += "flux_out=" + config.flux_out + "\n";
    out += "display_out=" + config.display_out + "\n";
    out += "tone_gamma=" + format_double(config.tone_gamma) + "\n";
    out += "fusion.max_iters=" + std::to_string(config.fusion.max_iters) + "\n";
    out += "fusion.rel_tol=" + format_double(config.fusion.rel_tol) + "\n";
    out += "fusion.denoise_sigma=" + format_double(config.fusion.denoise_sigma) + "\n";
    out += "fusion.saturation_margin=" + format_double(config.fusion.saturation_margin) + "\n";
    out += std::string("fusion.weighting=") +
           (config.fusion.weighting == hdr::FusionConfig::Weighting::kSnr ? "snr" : "snr2") + "\n";
    out += "exposures=" + std::to_string(config.exposures.size()) + "\n";
    for (std::size_t i = 0; i < config.exposures.size(); ++i) {
        const auto& e = config.exposures[i];
        const std::string prefix = "exposure." + std::to_string(i) + ".";
        out += prefix + "tau=" + format_double(e.tau) + "\n";
        out += prefix + "capacity=" + std::to_string(e.capacity) + "\n";
        out += prefix + "frames=" + std::to_string(e.frames) + "\n";
        out += prefix + "oversample=" + std::to_string(e.oversample) + "\n";
        out += prefix + "seed=" + std::to_string(e.seed) + "\n";
    }
    write_file(path, out);
}

RunConfig read_run_config(const std::string& path) {
    const auto kv = parse_key_values(path, read_file(path));
    const auto text_field = [&](const std::string& key) -> std::string {
        const auto it = kv.find(key);
        if (it == kv.end()) throw ParseError(path, 0, "missing key " + key);
        return it->second;
    };

    RunConfig config;
    config.scene_path = text_field("scene");
    config.c_max = parse_double_field(path, kv, "cmax");
    config.seed = parse_u64_field(path, kv, "seed");
    config.flux_out = text_field("flux_out");
    config.display_out = text_field("display_out");
    config.tone_gamma = parse_double_field(path, kv, "tone_gamma");
    config.fusion.max_iters = static_cast<int>(parse_u64_field(path, kv, "fusion.max_iters"));
    config.fusion.rel_tol = parse_double_field(path, kv, "fusion.rel_tol");
    config.fusion.denoise_sigma = parse_double_field(path, kv, "fusion.denoise_sigma");
    config.fusion.saturation_margin = parse_double_field(path, kv, "fusion.saturation_margin");
    const std::string weighting = text_field("fusion.weighting");
    if (weighting == "snr") {
        config.fusion.weighting = hdr::FusionConfig::Weighting::kSnr;
    } else if (weighting == "snr2") {
        config.fusion.weighting = hdr::FusionConfig::Weighting::kSnrSquared;
    } else {
        throw ParseError(path, 0, "fusion.weighting must be snr or snr2");
    }
    const std::uint64_t n = parse_u64_field(path, kv, "exposures");
    for (std::uint64_t i = 0; i < n; ++i) {
        const std::string prefix = "exposure." + std::to_string(i) + ".";
        sensor::ExposureConfig e;
        e.tau = parse_double_field(path, kv, prefix + "tau");
        e.capacity = static_cast<int>(parse_u64_field(path, kv, prefix + "capacity"));
        e.frames = static_cast<long>(parse_u64_field(path, kv, prefix + "frames"));
        e.oversample = static_cast<int>(parse_u64_field(path, kv, prefix + "oversample"));
        e.seed = parse_u64_field(path, kv, prefix + "seed");
        config.exposures.push_back(e);
    }
    if (kv.size() != 12 + 5 * n) throw ParseError(path, 0, "unexpected keys in run config");
    config.validate();
    return config;
}

} // namespace qis::io
