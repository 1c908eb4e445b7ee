// qishdr: photon-counting sensor simulation, SNR analysis, and HDR
// reconstruction from multi-exposure captures.
//
// Exit codes: 0 success, 1 usage error, 2 runtime error.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include "qis/hdr.hpp"
#include "qis/io.hpp"
#include "qis/metrics.hpp"
#include "qis/sensor.hpp"

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

const char* kRootUsage =
    "usage: qishdr <command> [options]\n"
    "\n"
    "commands:\n"
    "  snr-curve    emit exposure-referred SNR curves as CSV\n"
    "  simulate     Monte-Carlo capture of a scene into a summed image\n"
    "  reconstruct  fuse captures into an HDR flux map and a display image\n"
    "  compare      print the PSNR between two 8-bit PGM images\n"
    "\n"
    "run 'qishdr <command> --help' for per-command options\n";

const char* kSnrCurveUsage =
    "usage: qishdr snr-curve --capacity L --frames T [--oversample K] ...\n"
    "                        [--combine s1,s2,...] --out curve.csv\n"
    "\n"
    "Each --capacity starts a new sensor configuration; --frames and\n"
    "--oversample attach to the most recent one. Rows are evaluated over a\n"
    "log-spaced axis of 200 points spanning [1e-2, 1e6] photons per unit\n"
    "exposure, with all configurations compared at equal illumination.\n"
    "\n"
    "options:\n"
    "  --capacity L       counter capacity (repeatable; starts a config)\n"
    "  --frames T         frames summed per measurement\n"
    "  --oversample K     KxK spatial oversampling (default 1)\n"
    "  --combine s1,...   also emit each config's multi-exposure combined\n"
    "                     curve using the given exposure-time scales\n"
    "  --out FILE         output CSV path (required)\n";

const char* kSimulateUsage =
    "usage: qishdr simulate --scene scene.pgm --tau T --capacity L --frames N\n"
    "                       [--oversample K] [--cmax C] [--seed S] --out sum.qisf\n"
    "\n"
    "Captures the scene with the given exposure and writes the per-pixel\n"
    "clipped-count sums as a QISF file plus a '<out>.cfg' sidecar holding the\n"
    "exposure parameters for later reconstruction.\n"
    "\n"
    "options:\n"
    "  --scene FILE       input scene, 8/16-bit binary PGM or QISF flux map\n"
    "  --cmax C           flux mapped to the PGM maxval (default 6e6 ph/s)\n"
    "  --tau T            integration time per frame, seconds\n"
    "  --capacity L       counter capacity\n"
    "  --frames N         number of frames\n"
    "  --oversample K     KxK jots per scene pixel (default 1)\n"
    "  --seed S           RNG seed (default 0)\n"
    "  --out FILE         output QISF path\n";

const char* kReconstructUsage =
    "usage: qishdr reconstruct --inputs a.qisf,b.qisf,... [--denoise-sigma S]\n"
    "                          [--weight snr2|snr] [--cmax C] [--gamma G]\n"
    "                          --out hdr.qisf --display out.pgm\n"
    "\n"
    "Reads summed captures (each with its '<input>.cfg' sidecar), fuses them\n"
    "into a flux map with SNR-proportional iterative weighting, and writes the\n"
    "flux map plus a tone-mapped 8-bit preview.\n"
    "\n"
    "options:\n"
    "  --inputs LIST      comma-separated QISF captures (required)\n"
    "  --denoise-sigma S  Gaussian denoise stddev in pixels (default 0 = off)\n"
    "  --weight MODE      fusion weighting: snr2 (default) or snr\n"
    "  --cmax C           tone-map white level in photons/s (default 6e6)\n"
    "  --gamma G          tone-map gamma (default 2.2)\n"
    "  --out FILE         output QISF flux map (required)\n"
    "  --display FILE     output 8-bit PGM (required)\n";

const char* kCompareUsage =
    "usage: qishdr compare --reference ref.pgm --test out.pgm\n"
    "\n"
    "Prints the PSNR between the two images in dB with two decimals\n"
    "('inf' for identical images).\n";

double parse_double(const char* flag, const std::string& text) {
    double v = 0.0;
    const char* b = text.data();
    const char* e = b + text.size();
    const auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc() || res.ptr != e) {
        throw UsageError(std::string(flag) + ": invalid number '" + text + "'");
    }
    return v;
}

long parse_long(const char* flag, const std::string& text) {
    long v = 0;
    const char* b = text.data();
    const char* e = b + text.size();
    const auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc() || res.ptr != e) {
        throw UsageError(std::string(flag) + ": invalid integer '" + text + "'");
    }
    return v;
}

std::uint64_t parse_u64(const char* flag, const std::string& text) {
    std::uint64_t v = 0;
    const char* b = text.data();
    const char* e = b + text.size();
    const auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc() || res.ptr != e) {
        throw UsageError(std::string(flag) + ": invalid integer '" + text + "'");
    }
    return v;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find(',', start);
        if (end == std::string::npos) end = text.size();
        if (end > start) parts.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return parts;
}

// Sequential flag walker; --help anywhere prints usage and exits 0.
class Args {
public:
    Args(int argc, char** argv, int first, const char* usage)
        : usage_(usage) {
        for (int i = first; i < argc; ++i) args_.emplace_back(argv[i]);
        for (const auto& a : args_) {
            if (a == "--help" || a == "-h") {
                std::fputs(usage_, stdout);
                std::exit(0);
            }
        }
    }

    bool done() const { return pos_ >= args_.size(); }

    const std::string& flag() const { return args_[pos_]; }

    std::string take_value(const char* flag_name) {
        ++pos_;
        if (pos_ >= args_.size()) {
            throw UsageError(std::string(flag_name) + ": missing value");
        }
        return args_[pos_++];
    }

    void advance() { ++pos_; }

private:
    std::vector<std::string> args_;
    std::size_t pos_ = 0;
    const char* usage_;
};

int cmd_snr_curve(int argc, char** argv) {
    struct CurveGroup {
        long capacity = -1;
        long frames = -1;
        long oversample = 1;
    };
    std::vector<CurveGroup> specs;
    std::string out;
    std::string combine;

    Args args(argc, argv, 2, kSnrCurveUsage);
    while (!args.done()) {
        const std::string flag = args.flag();
        if (flag == "--capacity") {
            CurveGroup s;
            s.capacity = parse_long("--capacity", args.take_value("--capacity"));
            specs.push_back(s);
        } else if (flag == "--frames") {
            if (specs.empty()) throw UsageError("--frames given before any --capacity");
            specs.back().frames = parse_long("--frames", args.take_value("--frames"));
        } else if (flag == "--oversample") {
            if (specs.empty()) throw UsageError("--oversample given before any --capacity");
            specs.back().oversample = parse_long("--oversample", args.take_value("--oversample"));
        } else if (flag == "--combine") {
            combine = args.take_value("--combine");
        } else if (flag == "--out") {
            out = args.take_value("--out");
        } else {
            throw UsageError("unknown option '" + flag + "'");
        }
    }
    if (specs.empty()) throw UsageError("no sensor configurations given (need --capacity/--frames)");
    if (out.empty()) throw UsageError("--out is required");
    for (const auto& s : specs) {
        if (s.frames < 1) throw UsageError("every --capacity needs a --frames >= 1");
        if (s.capacity < 1) throw UsageError("--capacity must be >= 1");
        if (s.oversample < 1) throw UsageError("--oversample must be >= 1");
    }

    std::vector<double> scales;
    if (!combine.empty()) {
        for (const auto& part : split_list(combine)) {
            const double s = parse_double("--combine", part);
            if (!(s > 0.0)) throw UsageError("--combine: scales must be > 0");
            scales.push_back(s);
        }
        if (scales.empty()) throw UsageError("--combine: empty scale list");
    }

    const std::vector<double> axis = qis::metrics::default_theta_axis();
    std::vector<qis::metrics::SnrCurveConfig> configs;
    for (const auto& s : specs) {
        qis::metrics::SnrCurveConfig cfg;
        cfg.capacity = static_cast<int>(s.capacity);
        cfg.frames = s.frames * s.oversample * s.oversample;
        cfg.label = "L" + std::to_string(s.capacity) + "_T" + std::to_string(s.frames);
        if (s.oversample > 1) cfg.label += "_K" + std::to_string(s.oversample);
        configs.push_back(cfg);
    }

    qis::metrics::SnrCurve curve = qis::metrics::snr_curve(configs, axis);
    if (!scales.empty()) {
        for (const auto& cfg : configs) {
            std::vector<qis::metrics::BracketExposure> bracket;
            for (double s : scales) bracket.push_back({cfg.capacity, cfg.frames, s});
            curve.labels.push_back("combined_" + cfg.label);
            curve.rows.push_back(qis::metrics::combined_snr_row(bracket, axis));
        }
    }
    qis::io::write_csv(out, curve);
    std::printf("wrote %s (%zu rows x %zu points)\n", out.c_str(), curve.rows.size(),
                curve.theta_axis.size());
    return 0;
}

int cmd_simulate(int argc, char** argv) {
    std::string scene_path, out;
    double cmax = 6e6;
    qis::sensor::ExposureConfig config;
    bool have_tau = false, have_capacity = false, have_frames = false;

    Args args(argc, argv, 2, kSimulateUsage);
    while (!args.done()) {
        const std::string flag = args.flag();
        if (flag == "--scene") {
            scene_path = args.take_value("--scene");
        } else if (flag == "--cmax") {
            cmax = parse_double("--cmax", args.take_value("--cmax"));
        } else if (flag == "--tau") {
            config.tau = parse_double("--tau", args.take_value("--tau"));
            have_tau = true;
        } else if (flag == "--capacity") {
            config.capacity = static_cast<int>(parse_long("--capacity", args.take_value("--capacity")));
            have_capacity = true;
        } else if (flag == "--frames") {
            config.frames = parse_long("--frames", args.take_value("--frames"));
            have_frames = true;
        } else if (flag == "--oversample") {
            config.oversample = static_cast<int>(parse_long("--oversample", args.take_value("--oversample")));
        } else if (flag == "--seed") {
            config.seed = parse_u64("--seed", args.take_value("--seed"));
        } else if (flag == "--out") {
            out = args.take_value("--out");
        } else {
            throw UsageError("unknown option '" + flag + "'");
        }
    }
    if (scene_path.empty()) throw UsageError("--scene is required");
    if (out.empty()) throw UsageError("--out is required");
    if (!have_tau || !have_capacity || !have_frames) {
        throw UsageError("--tau, --capacity and --frames are required");
    }
    if (!(cmax > 0.0)) throw UsageError("--cmax must be > 0");
    try {
        config.validate();
    } catch (const std::domain_error& e) {
        throw UsageError(e.what());
    }

    const qis::sensor::PhotonFluxMap scene = qis::io::read_scene(scene_path, cmax);
    const qis::sensor::SumImage sum = qis::sensor::capture(scene, config);
    qis::io::write_sum(out, sum);
    qis::io::write_exposure_sidecar(out + ".cfg", config);
    std::printf("wrote %s (%dx%d, tau=%g, L=%d, T=%ld, K=%d, seed=%llu)\n", out.c_str(), sum.width,
                sum.height, config.tau, config.capacity, config.frames, config.oversample,
                static_cast<unsigned long long>(config.seed));
    return 0;
}

int cmd_reconstruct(int argc, char** argv) {
    std::string inputs, out, display_path;
    qis::hdr::FusionConfig fusion;
    double cmax = 6e6;
    double gamma = 2.2;

    Args args(argc, argv, 2, kReconstructUsage);
    while (!args.done()) {
        const std::string flag = args.flag();
        if (flag == "--inputs") {
            inputs = args.take_value("--inputs");
        } else if (flag == "--denoise-sigma") {
            fusion.denoise_sigma = parse_double("--denoise-sigma", args.take_value("--denoise-sigma"));
        } else if (flag == "--weight") {
            const std::string mode = args.take_value("--weight");
            if (mode == "snr2") {
                fusion.weighting = qis::hdr::FusionConfig::Weighting::kSnrSquared;
            } else if (mode == "snr") {
                fusion.weighting = qis::hdr::FusionConfig::Weighting::kSnr;
            } else {
                throw UsageError("--weight must be snr2 or snr");
            }
        } else if (flag == "--cmax") {
            cmax = parse_double("--cmax", args.take_value("--cmax"));
        } else if (flag == "--gamma") {
            gamma = parse_double("--gamma", args.take_value("--gamma"));
        } else if (flag == "--out") {
            out = args.take_value("--out");
        } else if (flag == "--display") {
            display_path = args.take_value("--display");
        } else {
            throw UsageError("unknown option '" + flag + "'");
        }
    }
    const std::vector<std::string> paths = split_list(inputs);
    if (paths.empty()) throw UsageError("--inputs is required (comma-separated QISF files)");
    if (out.empty() || display_path.empty()) throw UsageError("--out and --display are required");
    if (!(cmax > 0.0)) throw UsageError("--cmax must be > 0");
    if (!(gamma > 0.0)) throw UsageError("--gamma must be > 0");
    try {
        fusion.validate();
    } catch (const std::domain_error& e) {
        throw UsageError(e.what());
    }

    qis::hdr::ExposureStack stack;
    for (const auto& path : paths) {
        const qis::RealImage raw = qis::io::read_flux(path);
        qis::sensor::SumImage sum;
        sum.width = raw.width;
        sum.height = raw.height;
        sum.config = qis::io::read_exposure_sidecar(path + ".cfg");
        sum.sum.resize(raw.values.size());
        const double max_sum =
            static_cast<double>(sum.config.draws_per_pixel()) * sum.config.capacity;
        for (std::size_t i = 0; i < raw.values.size(); ++i) {
            const double v = raw.values[i];
            if (!(v >= 0.0) || v > max_sum || v != std::floor(v)) {
                throw std::runtime_error(path + ": value at index " + std::to_string(i) +
                                         " is not a valid count sum");
            }
            sum.sum[i] = static_cast<std::uint64_t>(v);
        }
        stack.entries.push_back(std::move(sum));
    }

    const qis::hdr::HdrEstimate estimate = qis::hdr::fuse(stack, fusion);
    qis::io::write_flux(out, estimate);
    qis::io::write_display(display_path, qis::hdr::tone_map(estimate, cmax, gamma));
    std::printf("wrote %s and %s (%dx%d, %zu exposures)\n", out.c_str(), display_path.c_str(),
                estimate.width, estimate.height, stack.entries.size());
    return 0;
}

int cmd_compare(int argc, char** argv) {
    std::string ref_path, test_path;
    Args args(argc, argv, 2, kCompareUsage);
    while (!args.done()) {
        const std::string flag = args.flag();
        if (flag == "--reference") {
            ref_path = args.take_value("--reference");
        } else if (flag == "--test") {
            test_path = args.take_value("--test");
        } else {
            throw UsageError("unknown option '" + flag + "'");
        }
    }
    if (ref_path.empty() || test_path.empty()) {
        throw UsageError("--reference and --test are required");
    }
    const double value =
        qis::metrics::psnr(qis::io::read_display(ref_path), qis::io::read_display(test_path));
    std::printf("%.2f\n", value);
    return 0;
}

int run(int argc, char** argv) {
    if (argc < 2) {
        std::fputs(kRootUsage, stderr);
        return 1;
    }
    const std::string cmd = argv[1];
    if (cmd == "--help" || cmd == "-h" || cmd == "help") {
        std::fputs(kRootUsage, stdout);
        return 0;
    }
    if (cmd == "snr-curve") return cmd_snr_curve(argc, argv);
    if (cmd == "simulate") return cmd_simulate(argc, argv);
    if (cmd == "reconstruct") return cmd_reconstruct(argc, argv);
    if (cmd == "compare") return cmd_compare(argc, argv);
    throw UsageError("unknown command '" + cmd + "'");
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
