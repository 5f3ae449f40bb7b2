// Copyright Contributors to the tubetopo Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Command-line front end. Kept in a header so the test suites can run the
// exact same code path in-process.
//
// Exit codes: 0 ok, 1 I/O, 2 validation, 3 internal error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <tubetopo/tubetopo.hpp>

namespace tubetopo::cli {

enum ExitCode : int { ok = 0, io_failure = 1, validation_failure = 2, internal_failure = 3 };

struct RunConfig {
    std::string pred;
    std::string label;
    std::string in;
    std::string out;
    double threshold = 0.5;
    std::string connectivity = "face";
    std::string se = "cross";
    std::string preset;
    std::optional<double> w_bce, w_dice, w_eval;
    std::string eval_kind;
    std::string mode = "label-overlap";
    std::uint64_t seed = 0;
    std::size_t factor = 1;
    std::string resample_mode = "max";
    std::string spacing;
    unsigned threads = 1;

    // loss
    std::string grad_out;
    std::string mask_out;
    // eval
    std::string label_csv;
    std::string pred_csv;
    // skeleton
    std::optional<std::size_t> max_iter;
    std::optional<double> binarize;
    // gen
    std::string dims = "64,64,64";
    std::size_t tubes = 3;
    std::size_t gaps = 1;
    double noise = 0.0;
    double radius_min = 2.0;
    double radius_max = 3.0;
    double length_min = 20.0;
    double length_max = 40.0;
};

namespace detail {

inline std::vector<double> parse_triple(const std::string& s, const char* what)
{
    std::vector<double> v;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(item, &used));
            if (used != item.size())
                throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ValidationError(std::string(what) + ": cannot parse '" + item + "'");
        }
    }
    if (v.size() != 3)
        throw ValidationError(std::string(what) + ": expected three comma-separated values");
    return v;
}

inline Spacing spacing_or(const RunConfig& c, const Spacing& fallback)
{
    if (c.spacing.empty())
        return fallback;
    const auto v = parse_triple(c.spacing, "--spacing");
    const Spacing s{v[0], v[1], v[2]};
    if (!s.valid())
        throw ValidationError("--spacing: components must be positive");
    return s;
}

inline void write_text(const std::string& path, const std::string& text)
{
    write_bytes(path, text);
}

inline void require_same_file_shape(const VolumeFile& a, const VolumeFile& b)
{
    if (a.shape() != b.shape())
        throw ValidationError("prediction shape " + to_string(a.shape()) + " differs from label shape " +
                              to_string(b.shape()));
}

inline LabelVolume load_label(const VolumeFile& f)
{
    LabelVolume l = f.as<std::uint8_t>();
    if (!f.is_u8())
        l = threshold(f.as<float>(), 0.5);
    require_binary(l, "label");
    return l;
}

inline int cmd_gen(const RunConfig& c, std::ostream& out)
{
    const auto d = parse_triple(c.dims, "--dims");
    synth::SceneParams p;
    p.dims = {static_cast<std::size_t>(d[0]), static_cast<std::size_t>(d[1]), static_cast<std::size_t>(d[2])};
    p.n_tubes = c.tubes;
    p.gaps_per_tube = c.gaps;
    p.noise = c.noise;
    p.radius_min = c.radius_min;
    p.radius_max = c.radius_max;
    p.length_min = c.length_min;
    p.length_max = c.length_max;
    if (c.spacing.empty())
        throw ValidationError("gen: --spacing is required");
    const Spacing sp = spacing_or(c, unit_spacing);
    const synth::Scene scene = synth::generate_scene(c.seed, p);

    std::filesystem::create_directories(c.out);
    const std::filesystem::path dir(c.out);
    write_volume(scene.label, sp, dir / "label.cvol");
    write_volume(scene.prediction, sp, dir / "pred.cvol");
    write_text((dir / "truth.json").string(), synth::truth_json(scene, c.seed).dump(2) + "\n");

    nlohmann::json j;
    j["label"] = (dir / "label.cvol").string();
    j["pred"] = (dir / "pred.cvol").string();
    j["truth"] = (dir / "truth.json").string();
    j["n_tubes"] = scene.tubes.size();
    j["seed"] = c.seed;
    out << dump(j);
    return ok;
}

inline int cmd_skeleton(const RunConfig& c, std::ostream& out)
{
    const VolumeFile in = read_volume(c.in);
    SkeletonOptions opt;
    opt.erode = parse_structuring_element(c.se);
    opt.max_iter = c.max_iter;
    const SkeletonResult<float> r = soft_skeleton_run(in.as<float>(), opt);
    if (c.binarize)
        write_volume(binarize_skeleton(r.skeleton, *c.binarize), in.spacing, c.out);
    else
        write_volume(r.skeleton, in.spacing, c.out);

    nlohmann::json j;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    j["skeleton_sum"] = sum(r.skeleton);
    j["voxels_above_half"] = count_nonzero(threshold(r.skeleton, 0.5));
    out << dump(j);
    return ok;
}

inline RegionOptions region_options(const RunConfig& c)
{
    RegionOptions opt;
    opt.mode = parse_region_mode(c.mode);
    opt.se = parse_structuring_element(c.se);
    opt.connectivity = parse_connectivity(c.connectivity);
    opt.threshold = c.threshold;
    return opt;
}

inline int cmd_regions(const RunConfig& c, std::ostream& out)
{
    const VolumeFile pf = read_volume(c.pred);
    const VolumeFile lf = read_volume(c.label);
    require_same_file_shape(pf, lf);
    const RegionAnalysis r = find_regions(pf.as<float>(), load_label(lf), region_options(c));
    write_volume(r.mask, lf.spacing, c.out);

    nlohmann::json j;
    j["mode"] = c.mode;
    j["mask_voxels"] = count_nonzero(r.mask);
    j["prediction_components"] = r.prediction_components;
    j["gap_components"] = r.gap_components;
    j["bridging_gaps"] = r.bridging_gaps;
    j["spurious_predictions"] = r.spurious_predictions;
    out << dump(j);
    return ok;
}

inline int cmd_loss(const RunConfig& c, std::ostream& out)
{
    LossWeights w;
    std::optional<std::string> preset;
    if (!c.preset.empty()) {
        w = preset_weights(c.preset);
        preset = c.preset;
    }
    if (c.w_bce)
        w.w_bce = *c.w_bce;
    if (c.w_dice)
        w.w_dice = *c.w_dice;
    if (c.w_eval)
        w.w_eval = *c.w_eval;
    if (!c.eval_kind.empty())
        w.eval = parse_eval_kind(c.eval_kind);
    if (preset && (c.w_bce || c.w_dice || c.w_eval || !c.eval_kind.empty()))
        preset.reset();

    const VolumeFile pf = read_volume(c.pred);
    const VolumeFile lf = read_volume(c.label);
    require_same_file_shape(pf, lf);
    LossOptions opt;
    opt.regions = region_options(c);
    opt.skeleton.erode = opt.regions.se;
    const LossReport r = combined_loss(pf.as<float>(), load_label(lf), w, opt);

    if (!c.grad_out.empty()) {
        if (!r.gradient)
            throw ValidationError("--grad-out: the selected eval term has no analytic gradient");
        write_volume(volume_cast<float>(*r.gradient), pf.spacing, c.grad_out);
    }
    if (!c.mask_out.empty()) {
        if (!r.region_mask)
            throw ValidationError("--mask-out: only the simplified-topology term produces a region mask");
        write_volume(*r.region_mask, pf.spacing, c.mask_out);
    }
    out << dump(to_json(r, preset));
    return ok;
}

inline int cmd_eval(const RunConfig& c, std::ostream& out)
{
    const VolumeFile pf = read_volume(c.pred);
    const VolumeFile lf = read_volume(c.label);
    require_same_file_shape(pf, lf);
    EvalOptions opt;
    opt.threshold = c.threshold;
    opt.connectivity = parse_connectivity(c.connectivity);
    const LabelVolume label = load_label(lf);
    const Spacing sp = spacing_or(c, lf.spacing);
    const MetricReport r = pf.is_u8() ? evaluate_pair(pf.as<std::uint8_t>(), label, sp, opt)
                                      : evaluate_pair(pf.as<float>(), label, sp, opt);
    if (!c.label_csv.empty())
        write_text(c.label_csv, lengths_csv(r.label_lengths));
    if (!c.pred_csv.empty())
        write_text(c.pred_csv, lengths_csv(r.pred_lengths));
    out << dump(to_json(r));
    return ok;
}

inline int cmd_lengths(const RunConfig& c, std::ostream& out)
{
    const VolumeFile in = read_volume(c.in);
    LengthOptions opt;
    opt.instance_connectivity = parse_connectivity(c.connectivity);
    const LabelVolume mask = in.is_u8() ? in.as<std::uint8_t>() : threshold(in.as<float>(), c.threshold);
    const std::string csv = lengths_csv(instance_lengths(mask, spacing_or(c, in.spacing), opt));
    if (c.out.empty())
        out << csv;
    else
        write_text(c.out, csv);
    return ok;
}

inline int cmd_resample(const RunConfig& c, std::ostream& out)
{
    const VolumeFile in = read_volume(c.in);
    if (c.factor == 0)
        throw ValidationError("--factor must be positive");
    const double f = static_cast<double>(c.factor);
    nlohmann::json j;
    j["factor"] = c.factor;
    j["mode"] = c.resample_mode;
    auto run = [&](const auto& v) {
        using V = std::decay_t<decltype(v)>;
        if (c.resample_mode == "up") {
            const V up = upscale_xy_nearest(v, c.factor);
            write_volume(up, Spacing{in.spacing.z, in.spacing.y / f, in.spacing.x / f}, c.out);
            j["shape"] = {up.shape().z, up.shape().y, up.shape().x};
            j["pad_y"] = 0;
            j["pad_x"] = 0;
            return;
        }
        const auto r = downscale_xy(v, c.factor, parse_pool_mode(c.resample_mode));
        write_volume(r.volume, Spacing{in.spacing.z, in.spacing.y * f, in.spacing.x * f}, c.out);
        j["shape"] = {r.volume.shape().z, r.volume.shape().y, r.volume.shape().x};
        j["pad_y"] = r.pad_y;
        j["pad_x"] = r.pad_x;
    };
    if (in.is_u8()) {
        if (c.resample_mode == "mean")
            throw ValidationError("resample: mean pooling needs an f32 volume; use max for u8 labels");
        run(std::get<LabelVolume>(in.volume));
    } else {
        run(std::get<ProbVolume>(in.volume));
    }
    out << dump(j);
    return ok;
}

} // namespace detail

/// Runs one invocation. `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"tubetopo: connectivity-preserving losses and tubular-instance metrics"};
    app.require_subcommand(1);
    RunConfig c;
    app.add_option("--threads", c.threads, "Worker threads for data-parallel kernels (0 = all cores)");

    const std::vector<std::string> conns{"face", "full"};
    const std::vector<std::string> ses{"cross", "cube"};
    const std::vector<std::string> modes{"as-written", "label-overlap"};

    auto* gen = app.add_subcommand("gen", "Generate a synthetic tube scene");
    gen->add_option("--out", c.out, "Output directory")->required();
    gen->add_option("--seed", c.seed, "RNG seed");
    gen->add_option("--dims", c.dims, "Scene extents z,y,x");
    gen->add_option("--spacing", c.spacing, "Voxel spacing sz,sy,sx in micrometres")->required();
    gen->add_option("--tubes", c.tubes, "Number of tubes");
    gen->add_option("--gaps", c.gaps, "Prediction gaps per tube");
    gen->add_option("--noise", c.noise, "Prediction noise amplitude");
    gen->add_option("--radius-min", c.radius_min);
    gen->add_option("--radius-max", c.radius_max);
    gen->add_option("--length-min", c.length_min);
    gen->add_option("--length-max", c.length_max);

    auto* skel = app.add_subcommand("skeleton", "Soft skeleton of a volume");
    skel->add_option("--in", c.in, "Input volume")->required();
    skel->add_option("--out", c.out, "Output skeleton volume")->required();
    skel->add_option("--se", c.se, "Erosion structuring element")->check(CLI::IsMember(ses));
    skel->add_option("--max-iter", c.max_iter, "Iteration cap");
    skel->add_option("--binarize", c.binarize, "Write a u8 skeleton thresholded at this value");

    auto* regions = app.add_subcommand("regions", "Critical-region mask");
    for (auto* sc : {regions}) {
        sc->add_option("--pred", c.pred, "Prediction volume")->required();
        sc->add_option("--label", c.label, "Label volume")->required();
        sc->add_option("--out", c.out, "Output mask volume")->required();
    }

    auto* loss = app.add_subcommand("loss", "Evaluate a weighted loss");
    loss->add_option("--pred", c.pred, "Prediction volume")->required();
    loss->add_option("--label", c.label, "Label volume")->required();
    loss->add_option("--preset", c.preset, "Weight preset")
        ->check(CLI::IsMember({"baseline", "cldice", "negative-centerline", "simplified-topology"}));
    loss->add_option("--w-bce", c.w_bce);
    loss->add_option("--w-dice", c.w_dice);
    loss->add_option("--w-eval", c.w_eval);
    loss->add_option("--eval", c.eval_kind, "Eval term")
        ->check(CLI::IsMember({"none", "cl_dice", "negative_centerline", "simplified_topology"}));
    loss->add_option("--grad-out", c.grad_out, "Write d loss / d pred as an f32 volume");
    loss->add_option("--mask-out", c.mask_out, "Write the critical-region mask");

    for (auto* sc : {regions, loss}) {
        sc->add_option("--mode", c.mode, "Spurious-component rule")->check(CLI::IsMember(modes));
        sc->add_option("--se", c.se, "Structuring element")->check(CLI::IsMember(ses));
        sc->add_option("--connectivity", c.connectivity)->check(CLI::IsMember(conns));
        sc->add_option("--threshold", c.threshold, "Prediction threshold")->check(CLI::Range(0.0, 1.0));
    }

    auto* eval = app.add_subcommand("eval", "Metric report for a prediction/label pair");
    eval->add_option("--pred", c.pred, "Prediction volume")->required();
    eval->add_option("--label", c.label, "Label volume")->required();
    eval->add_option("--threshold", c.threshold)->check(CLI::Range(0.0, 1.0));
    eval->add_option("--connectivity", c.connectivity)->check(CLI::IsMember(conns));
    eval->add_option("--spacing", c.spacing, "Override spacing sz,sy,sx");
    eval->add_option("--label-csv", c.label_csv, "Write label instance lengths");
    eval->add_option("--pred-csv", c.pred_csv, "Write prediction instance lengths");

    auto* lengths = app.add_subcommand("lengths", "Per-instance lengths as CSV");
    lengths->add_option("--in", c.in, "Binary mask volume")->required();
    lengths->add_option("--out", c.out, "CSV path (stdout if omitted)");
    lengths->add_option("--spacing", c.spacing, "Override spacing sz,sy,sx");
    lengths->add_option("--connectivity", c.connectivity)->check(CLI::IsMember(conns));
    lengths->add_option("--threshold", c.threshold)->check(CLI::Range(0.0, 1.0));

    auto* resample = app.add_subcommand("resample", "Downscale or upscale in y and x");
    resample->add_option("--in", c.in, "Input volume")->required();
    resample->add_option("--out", c.out, "Output volume")->required();
    resample->add_option("--factor", c.factor, "Integer factor")->required();
    resample->add_option("--mode", c.resample_mode, "mean|max downscale, up = nearest upscale")
        ->check(CLI::IsMember({"mean", "max", "up"}));

    std::vector<std::string> storage{"tubetopo"};
    storage.insert(storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : storage)
        argv.push_back(s.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : validation_failure;
    }

    try {
        set_thread_count(c.threads);
        if (*gen)
            return detail::cmd_gen(c, out);
        if (*skel)
            return detail::cmd_skeleton(c, out);
        if (*regions)
            return detail::cmd_regions(c, out);
        if (*loss)
            return detail::cmd_loss(c, out);
        if (*eval)
            return detail::cmd_eval(c, out);
        if (*lengths)
            return detail::cmd_lengths(c, out);
        if (*resample)
            return detail::cmd_resample(c, out);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return validation_failure;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return io_failure;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return io_failure;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return internal_failure;
    }
    return internal_failure;
}

} // namespace tubetopo::cli
