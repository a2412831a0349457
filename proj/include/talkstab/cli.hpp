#pragma once

// talkstab command line: one binary, subcommand style.
//   flow       dense optical flow for a frame sequence -> .flo series
//   sense      noise pattern + normality survey from aligned flow series
//   stabilize  D-adaptive temporal filtering of a frame sequence
//   eval       lip-sync / clarity metric report for landmark tracks
//   control    anchor selection, lambda series, embedding adjustment
//   mix        shape/texture recombination through a morphable model
//   fixture    synthetic ground-truth asset generation
//
// Exit codes: 0 success, 1 runtime/I/O failure, 2 usage/validation failure.
// Diagnostics go to stderr; data only to the declared output paths.
// TALKSTAB_THREADS caps internal parallelism (0 = auto).

#include <ctime>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "talkstab/core.hpp"
#include "talkstab/embedding_control.hpp"
#include "talkstab/embedding_io.hpp"
#include "talkstab/fixtures.hpp"
#include "talkstab/flow_io.hpp"
#include "talkstab/horn_schunck.hpp"
#include "talkstab/image_io.hpp"
#include "talkstab/landmark_io.hpp"
#include "talkstab/lip_geometry.hpp"
#include "talkstab/metrics.hpp"
#include "talkstab/morphable.hpp"
#include "talkstab/noise_model.hpp"

namespace talkstab::cli {

namespace detail {

inline void attach_config(CLI::App* cmd, std::string& slot) {
    // consumed before parsing by merge_config_into_args; declared here so the
    // parser accepts it and --help documents it
    cmd->add_option("--config", slot,
                    "JSON file with flag values ({\"flag-name\": value}); flags given "
                    "explicitly win");
}

// Expands "--config file.json" into ordinary flag tokens for every key not
// already present on the command line. Bad keys then fail normal flag
// validation, naming the offender.
inline std::vector<std::string> merge_config_into_args(std::vector<std::string> args) {
    std::string config_path;
    for (size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            config_path = args[i + 1];
        } else if (args[i].rfind("--config=", 0) == 0) {
            config_path = args[i].substr(9);
        }
    }
    if (config_path.empty()) return args;

    const auto bytes = read_file_bytes(config_path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("--config: not valid JSON: " + std::string(e.what()));
    }
    if (!doc.is_object()) throw ValidationError("--config: document must be a JSON object");

    auto given = [&args](const std::string& flag) {
        for (const auto& a : args)
            if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
        return false;
    };
    auto scalar = [](const nlohmann::json& v) -> std::string {
        if (v.is_string()) return v.get<std::string>();
        return v.dump();
    };
    for (const auto& [key, value] : doc.items()) {
        const std::string flag = "--" + key;
        if (given(flag)) continue;
        if (value.is_boolean()) {
            if (value.get<bool>()) args.push_back(flag);
            continue;
        }
        args.push_back(flag);
        if (value.is_array()) {
            for (const auto& v : value) args.push_back(scalar(v));
        } else {
            args.push_back(scalar(value));
        }
    }
    return args;
}

inline void write_json(const nlohmann::json& j, const std::string& path) {
    const std::string text = j.dump(2) + "\n";
    write_file_bytes(path, std::vector<uint8_t>(text.begin(), text.end()));
}

inline nlohmann::json maybe_stamp(nlohmann::json j, bool stamp) {
    if (stamp) {
        char buf[64];
        const std::time_t now = std::time(nullptr);
        std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        j["stamp"] = buf;
    }
    return j;
}

} // namespace detail

inline int run(int argc, const char* const* argv) {
    CLI::App app{"talkstab: temporal noise sensing and stabilization for talking-face clips, "
                 "with structure-embedding control, morphable-model mixing, and a lip-sync "
                 "metric suite"};
    app.require_subcommand(1);

    // ---- flow ----
    auto* flow_cmd = app.add_subcommand("flow", "dense optical flow between consecutive frames");
    struct {
        std::string frames, out, config;
        FlowParams params;
    } flow_args;
    flow_cmd->add_option("--frames", flow_args.frames, "input frame pattern or directory")
        ->required();
    flow_cmd->add_option("--out", flow_args.out, "output directory for flow_%05d.flo")
        ->required();
    flow_cmd->add_option("--lambda", flow_args.params.lambda_hs,
                         "brightness-constancy weight (> 0)");
    flow_cmd->add_option("--iterations", flow_args.params.iterations, "solver iterations per level");
    flow_cmd->add_option("--levels", flow_args.params.levels, "pyramid levels");
    detail::attach_config(flow_cmd, flow_args.config);

    // ---- sense ----
    auto* sense_cmd =
        app.add_subcommand("sense", "noise pattern and Gaussian-model survey from flow series");
    struct {
        std::string fake, real, mask, out_pattern, out_report, config;
        std::vector<double> levels = {0.90, 0.95, 0.99};
        int min_samples = kDefaultMinSamples;
        bool stamp = false;
    } sense_args;
    sense_cmd->add_option("--fake", sense_args.fake, "directory of generated-video .flo files")
        ->required();
    sense_cmd->add_option("--real", sense_args.real, "directory of reference-video .flo files")
        ->required();
    sense_cmd->add_option("--mask", sense_args.mask, "region mask PGM (default: whole frame)");
    sense_cmd->add_option("--out-pattern", sense_args.out_pattern, "output .flo for the D map")
        ->required();
    sense_cmd->add_option("--out-report", sense_args.out_report, "output JSON report")
        ->required();
    sense_cmd->add_option("--levels", sense_args.levels, "confidence levels for the survey");
    sense_cmd->add_option("--min-samples", sense_args.min_samples,
                          "minimum paired samples per pixel");
    sense_cmd->add_flag("--stamp", sense_args.stamp, "include a timestamp in the report");
    detail::attach_config(sense_cmd, sense_args.config);

    // ---- stabilize ----
    auto* stab_cmd = app.add_subcommand("stabilize", "apply the adaptive temporal filter");
    struct {
        std::string frames, pattern, mask, out, config;
        int half_width = 2;
    } stab_args;
    stab_cmd->add_option("--frames", stab_args.frames, "input frame pattern or directory")
        ->required();
    stab_cmd->add_option("--pattern", stab_args.pattern, "noise pattern .flo (from sense)")
        ->required();
    stab_cmd->add_option("--mask", stab_args.mask, "region mask PGM (default: whole frame)");
    stab_cmd->add_option("--out", stab_args.out, "output directory for filtered frames")
        ->required();
    stab_cmd->add_option("-K,--half-width", stab_args.half_width,
                         "kernel half width (kernel size 2K+1)");
    detail::attach_config(stab_cmd, stab_args.config);

    // ---- eval ----
    auto* eval_cmd = app.add_subcommand("eval", "lip-sync and clarity metrics");
    struct {
        std::string gen, ref, frames, scheme = "ibug68", out, config;
        bool no_scale = false;
        bool stamp = false;
    } eval_args;
    eval_cmd->add_option("--gen", eval_args.gen, "generated landmark CSV")->required();
    eval_cmd->add_option("--ref", eval_args.ref, "reference landmark CSV")->required();
    eval_cmd->add_option("--frames", eval_args.frames,
                         "generated frames for per-frame CPBD (optional)");
    eval_cmd->add_option("--scheme", eval_args.scheme, "landmark scheme (ibug68, inner6)");
    eval_cmd->add_flag("--no-scale", eval_args.no_scale,
                       "strict rigid alignment (no scale normalization) for PD");
    eval_cmd->add_option("--out", eval_args.out, "output report JSON")->required();
    eval_cmd->add_flag("--stamp", eval_args.stamp, "include a timestamp in the report");
    detail::attach_config(eval_cmd, eval_args.config);

    // ---- control ----
    auto* control_cmd =
        app.add_subcommand("control", "anchor selection and embedding adjustment");
    struct {
        std::string embeddings, landmarks, scheme = "ibug68", out_embeddings, out_csv, config;
        double lambda_min = 0.25, lambda_max = 4.0;
    } control_args;
    control_cmd->add_option("--embeddings", control_args.embeddings, "input embedding JSON")
        ->required();
    control_cmd->add_option("--landmarks", control_args.landmarks, "lip-reference landmark CSV")
        ->required();
    control_cmd->add_option("--scheme", control_args.scheme, "landmark scheme");
    control_cmd->add_option("--lambda-min", control_args.lambda_min, "lower clamp for lambda");
    control_cmd->add_option("--lambda-max", control_args.lambda_max, "upper clamp for lambda");
    control_cmd->add_option("--out-embeddings", control_args.out_embeddings,
                            "adjusted embedding JSON")
        ->required();
    control_cmd->add_option("--out-csv", control_args.out_csv, "CSV of (frame, gamma, lambda)")
        ->required();
    detail::attach_config(control_cmd, control_args.config);

    // ---- mix ----
    auto* mix_cmd = app.add_subcommand("mix", "combine lip shape with identity texture");
    struct {
        std::string model, lip, id, out_params, out_landmarks, config;
    } mix_args;
    mix_cmd->add_option("--model", mix_args.model, "morphable model JSON")->required();
    mix_cmd->add_option("--lip", mix_args.lip, "lip-reference FaceParams JSON")->required();
    mix_cmd->add_option("--id", mix_args.id, "identity-reference FaceParams JSON")->required();
    mix_cmd->add_option("--out-params", mix_args.out_params, "mixed FaceParams JSON")->required();
    mix_cmd->add_option("--out-landmarks", mix_args.out_landmarks,
                        "projected lip landmarks CSV")
        ->required();
    detail::attach_config(mix_cmd, mix_args.config);

    // ---- fixture ----
    auto* fixture_cmd = app.add_subcommand("fixture", "generate synthetic test assets");
    FixtureSpec fixture_spec;
    std::string fixture_out, fixture_config;
    fixture_cmd
        ->add_option("--kind", fixture_spec.kind,
                     "translation | flicker | mouth_model | gaussian_flow | blur_ladder")
        ->required();
    fixture_cmd->add_option("--out", fixture_out, "output directory")->required();
    fixture_cmd->add_option("--seed", fixture_spec.seed, "generator seed");
    fixture_cmd->add_option("--width", fixture_spec.width, "frame width");
    fixture_cmd->add_option("--height", fixture_spec.height, "frame height");
    fixture_cmd->add_option("--frames", fixture_spec.frames, "frame / sample count");
    fixture_cmd->add_option("--dx", fixture_spec.dx, "translation per frame, x");
    fixture_cmd->add_option("--dy", fixture_spec.dy, "translation per frame, y");
    fixture_cmd->add_option("--intensity-sigma", fixture_spec.intensity_sigma,
                            "flicker intensity noise std");
    fixture_cmd->add_option("--motion-amplitude", fixture_spec.motion_amplitude,
                            "flicker oscillation amplitude, px");
    fixture_cmd->add_option("--motion-period", fixture_spec.motion_period,
                            "flicker oscillation period, frames");
    fixture_cmd->add_option("--flow-noise-sigma", fixture_spec.flow_noise_sigma,
                            "flicker injected flow noise std");
    fixture_cmd->add_option("--noise-variance", fixture_spec.noise_variance_per_component,
                            "gaussian_flow injected variance per component");
    fixture_cmd->add_option("--blur-sigmas", fixture_spec.blur_sigmas, "blur ladder sigmas");
    fixture_cmd->add_option("--alpha-grid", fixture_spec.alpha_grid, "mouth model alpha1 grid");
    detail::attach_config(fixture_cmd, fixture_config);

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        args = detail::merge_config_into_args(std::move(args));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    std::vector<const char*> argv2;
    argv2.push_back(argc > 0 ? argv[0] : "talkstab");
    for (const auto& a : args) argv2.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv2.size()), argv2.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e); // help text, exit 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*flow_cmd) {
            const FrameSequence seq = load_frames(flow_args.frames);
            if (seq.size() < 2) throw ValidationError("need >= 2 frames");
            validate_flow_params(flow_args.params);
            const FlowSeries series = flow_series(seq, flow_args.params);
            std::filesystem::create_directories(flow_args.out);
            store_flow_series(series, flow_args.out);
            std::cerr << "flow: wrote " << series.size() << " fields to " << flow_args.out
                      << "\n";
        } else if (*sense_cmd) {
            const FlowSeries fake = load_flow_series(sense_args.fake);
            const FlowSeries real = load_flow_series(sense_args.real);
            const RegionMask mask = sense_args.mask.empty()
                                        ? full_mask(fake.width, fake.height)
                                        : load_mask(sense_args.mask);
            const NormalityReport survey = normality_survey(fake, mask, sense_args.levels);
            const NoisePatternMap pattern =
                noise_pattern(fake, real, mask, sense_args.min_samples);
            store_flow(pattern_to_flow(pattern), sense_args.out_pattern);

            nlohmann::json report = normality_report_to_json(survey);
            report["mnp"] = round_g9(mean_noise_pattern(pattern, mask));
            size_t valid = 0;
            for (uint8_t v : pattern.valid) valid += v;
            report["valid_pixels"] = valid;
            report["config"] = {{"fake", sense_args.fake},
                                {"real", sense_args.real},
                                {"mask", sense_args.mask},
                                {"levels", sense_args.levels},
                                {"min_samples", sense_args.min_samples}};
            detail::write_json(detail::maybe_stamp(report, sense_args.stamp),
                               sense_args.out_report);
            std::cerr << "sense: MNP " << report["mnp"] << ", report " << sense_args.out_report
                      << "\n";
        } else if (*stab_cmd) {
            const FrameSequence seq = load_frames(stab_args.frames);
            const NoisePatternMap pattern = pattern_from_flow(load_flow(stab_args.pattern));
            const RegionMask mask = stab_args.mask.empty() ? full_mask(seq.width, seq.height)
                                                           : load_mask(stab_args.mask);
            const FrameSequence out = stabilize(seq, pattern, stab_args.half_width, mask);
            std::filesystem::create_directories(stab_args.out);
            const char* ext = seq.channels == 1 ? "pgm" : "ppm";
            store_frames(out, (std::filesystem::path(stab_args.out) /
                               (std::string("frame_%05d.") + ext))
                                  .string());
            std::cerr << "stabilize: wrote " << out.size() << " frames to " << stab_args.out
                      << "\n";
        } else if (*eval_cmd) {
            const LipScheme scheme = lip_scheme(eval_args.scheme);
            const LandmarkTrack gen = load_landmarks(eval_args.gen, scheme.name);
            const LandmarkTrack ref = load_landmarks(eval_args.ref, scheme.name);
            if (gen.size() != ref.size()) throw ValidationError("track length mismatch");
            if (gen.dim != ref.dim) throw ValidationError("track dimensionality mismatch");

            MetricReport report;
            for (size_t i = 0; i < gen.size(); ++i)
                report.pd_per_frame.push_back(
                    procrustes_disparity(gen.frames[i], ref.frames[i], !eval_args.no_scale)
                        .disparity);
            double pd_sum = 0;
            for (double v : report.pd_per_frame) pd_sum += v;
            report.pd = pd_sum / static_cast<double>(report.pd_per_frame.size());

            const LipDistanceSeries gen_series = lip_series(gen, scheme);
            const LipDistanceSeries ref_series = lip_series(ref, scheme);
            report.csld_value = csld(gen_series, ref_series);
            report.pcld_value = pcld(gen_series, ref_series);

            if (!eval_args.frames.empty()) {
                const FrameSequence frames = load_frames(eval_args.frames);
                double sum = 0;
                for (const Raster& f : frames.frames) {
                    report.cpbd_per_frame.push_back(cpbd(f));
                    sum += report.cpbd_per_frame.back();
                }
                report.cpbd_mean = sum / static_cast<double>(frames.size());
            }
            report.config = {{"gen", eval_args.gen},
                             {"ref", eval_args.ref},
                             {"frames", eval_args.frames},
                             {"scheme", eval_args.scheme},
                             {"scale_normalized", !eval_args.no_scale}};
            detail::write_json(detail::maybe_stamp(metric_report_to_json(report), eval_args.stamp),
                               eval_args.out);

            const std::string stem = (std::filesystem::path(eval_args.out).parent_path() /
                                      std::filesystem::path(eval_args.out).stem())
                                         .string();
            store_series_csv(gen_series.values, "gamma", stem + "_gen_series.csv");
            store_series_csv(ref_series.values, "gamma", stem + "_ref_series.csv");
            std::cerr << "eval: PD " << *report.pd << ", CSLD " << *report.csld_value << ", PCLD "
                      << *report.pcld_value << "\n";
        } else if (*control_cmd) {
            const LipScheme scheme = lip_scheme(control_args.scheme);
            const LandmarkTrack track = load_landmarks(control_args.landmarks, scheme.name);
            const auto embeddings = load_embeddings(control_args.embeddings);
            if (track.size() != embeddings.size())
                throw ValidationError("landmark/embedding length mismatch");

            const AnchorSelection sel = select_anchor(track, embeddings, scheme,
                                                      control_args.lambda_min,
                                                      control_args.lambda_max);
            const LipDistanceSeries gamma = lip_series(track, scheme);

            std::vector<EmbeddingVector> adjusted;
            adjusted.push_back(embeddings[0]);
            std::string csv = "frame,gamma,lambda\n";
            csv += "0," + format_g9(gamma.values[0]) + ",\n";
            for (size_t t = 1; t < embeddings.size(); ++t) {
                const double lambda =
                    compute_lambda(gamma.values[t], gamma.values[t - 1], sel.state);
                adjusted.push_back(adjust_embedding(sel.state, embeddings[t], lambda));
                csv += std::to_string(t) + "," + format_g9(gamma.values[t]) + "," +
                       format_g9(lambda) + "\n";
            }
            store_embeddings(adjusted, control_args.out_embeddings);
            write_file_bytes(control_args.out_csv, std::vector<uint8_t>(csv.begin(), csv.end()));
            std::cerr << "control: anchor frame " << sel.index << ", gamma "
                      << sel.state.anchor_gamma << "\n";
        } else if (*mix_cmd) {
            const MorphableModel model = load_model(mix_args.model);
            const FaceParams lip = load_face_params(mix_args.lip);
            const FaceParams id = load_face_params(mix_args.id);
            if (lip.alpha.size() != model.m || id.alpha.size() != model.m)
                throw ValidationError("params/model coefficient count mismatch");
            const FaceParams mixed = mix_parameters(lip, id);
            const FaceSample sample = synthesize(model, mixed);
            const LandmarkSet lms = project_landmarks(sample.shape, model);
            store_face_params(mixed, mix_args.out_params);
            LandmarkTrack track;
            track.dim = 2;
            track.frames.push_back(lms);
            store_landmarks(track, mix_args.out_landmarks);
            std::cerr << "mix: wrote params and " << lms.points() << " landmarks\n";
        } else if (*fixture_cmd) {
            const auto manifest = make_fixture(fixture_spec, fixture_out);
            std::cerr << "fixture: " << fixture_spec.kind << " written to " << fixture_out
                      << "\n";
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

inline int run(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("talkstab");
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data());
}

} // namespace talkstab::cli
