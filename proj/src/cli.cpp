// Copyright (c) 2026 the sean-lib authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sean/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <utility>

#include <CLI11.hpp>

#include "sean/common.hpp"
#include "sean/image_io.hpp"
#include "sean/metrics.hpp"
#include "sean/ops.hpp"
#include "sean/training.hpp"

namespace sean {
namespace {

namespace fs = std::filesystem;

std::string trim_ws(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Expands `--config <file>` into `--key=value` tokens. Lines are `key = value`
// with # comments; keys already given on the command line keep their value.
std::vector<std::string> apply_config(const std::vector<std::string>& args) {
    std::string config_path;
    std::vector<std::string> rest;
    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string& tok = args[i];
        if (tok == "--config") {
            check(i + 1 < args.size(), "cli: --config needs a file path");
            check(config_path.empty(), "cli: --config given more than once");
            config_path = args[++i];
        } else if (tok.rfind("--config=", 0) == 0) {
            check(config_path.empty(), "cli: --config given more than once");
            config_path = tok.substr(9);
        } else {
            rest.push_back(tok);
        }
    }
    if (config_path.empty()) return rest;

    std::ifstream is(config_path);
    check(is.good(), "cli: cannot open config file '", config_path, "'");
    auto already_given = [&rest](const std::string& flag) {
        const std::string with_eq = flag + "=";
        for (const std::string& tok : rest) {
            if (tok == flag || tok.rfind(with_eq, 0) == 0) return true;
        }
        return false;
    };
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim_ws(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        check(eq != std::string::npos, "cli: config line ", line_no,
              " is not 'key = value'");
        const std::string key = trim_ws(line.substr(0, eq));
        const std::string value = trim_ws(line.substr(eq + 1));
        check(!key.empty(), "cli: config line ", line_no, " has an empty key");
        check(key != "config", "cli: config files cannot include 'config'");
        const std::string flag = "--" + key;
        if (already_given(flag)) continue;
        rest.push_back(flag + "=" + value);
    }
    return rest;
}

std::vector<std::int64_t> parse_int_list(const std::string& text,
                                         const std::string& what) {
    std::vector<std::int64_t> out;
    std::istringstream is(text);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoll(tok, &used));
            check(used == tok.size(), "cli: bad ", what, " entry '", tok, "'");
        } catch (const Error&) {
            throw;
        } catch (const std::exception&) {
            fail("cli: bad ", what, " entry '", tok, "'");
        }
    }
    check(!out.empty(), "cli: ", what, " must not be empty");
    return out;
}

struct StyleSource {
    std::string image;
    std::string mask;
};

StyleSource parse_source(const std::string& spec) {
    const auto pos = spec.rfind(':');
    check(pos != std::string::npos && pos > 0 && pos + 1 < spec.size(),
          "cli: style source must be <image.ppm>:<mask.pgm>, got '", spec, "'");
    return {spec.substr(0, pos), spec.substr(pos + 1)};
}

Tensor as_batch(const Tensor& chw) {
    return reshape(chw, {1, chw.dim(0), chw.dim(1), chw.dim(2)});
}

StyleMatrix encode_style(TrainState& state, const StyleSource& src) {
    const Tensor image = read_ppm(src.image);
    const LabelMap mask = read_pgm(src.mask);
    NoGradGuard guard;
    return style_encoder_forward(state.models.encoder, as_batch(image), mask);
}

StyleMatrix zero_style_matrix(const TrainState& state) {
    StyleMatrix st;
    st.codes = Tensor::zeros({state.cfg.style_dim, state.cfg.num_labels});
    st.present.assign(static_cast<std::size_t>(state.cfg.num_labels), 0);
    return st;
}

StyleMatrix clone_style_matrix(const StyleMatrix& src) {
    StyleMatrix st;
    st.codes = Tensor::from_vector(src.codes.shape(),
                                   std::vector<double>(src.codes.vec()));
    st.present = src.present;
    return st;
}

Tensor squeeze_batch(const Tensor& batch) {
    return reshape(batch, {batch.dim(1), batch.dim(2), batch.dim(3)});
}

Tensor generate_single(TrainState& state, const StyleMatrix& style,
                       const LabelMap& mask) {
    NoGradGuard guard;
    std::vector<StyleMatrix> styles{style};
    std::vector<LabelMap> masks{mask};
    return squeeze_batch(generator_forward(state.models.generator, styles, masks));
}

Tensor to_unit_range(const Tensor& x) { // [-1,1] -> [0,1]
    NoGradGuard guard;
    return mul_scalar(add_scalar(x, 1.0), 0.5);
}

Tensor quantize_roundtrip(const Tensor& x) {
    std::vector<double> v(static_cast<std::size_t>(x.numel()));
    for (std::int64_t i = 0; i < x.numel(); ++i) {
        v[static_cast<std::size_t>(i)] = dequantize_unit(quantize_unit(x.data()[i]));
    }
    return Tensor::from_vector(x.shape(), std::move(v));
}

void print_image_metrics(std::ostream& out, const Tensor& a_chw, const Tensor& b_chw) {
    NoGradGuard guard;
    const Tensor a = as_batch(to_unit_range(a_chw));
    const Tensor b = as_batch(to_unit_range(b_chw));
    out << "psnr " << psnr(a, b) << '\n';
    out << "ssim " << ssim(a, b) << '\n';
    out << "rmse " << rmse(a, b) << '\n';
}

// --- gen-data ----------------------------------------------------------------------

struct GenDataOpts {
    std::string out;
    std::int64_t count = 8;
    std::int64_t labels = 3;
    std::int64_t size = 32;
    std::uint64_t seed = 1;
};

void run_gen_data(const GenDataOpts& opts, std::ostream& out) {
    std::vector<SynthSample> data =
        gen_synthetic_dataset(opts.count, opts.labels, opts.size, opts.seed);
    fs::create_directories(opts.out);
    DatasetManifest manifest;
    manifest.count = opts.count;
    manifest.labels = opts.labels;
    manifest.size = opts.size;
    manifest.seed = opts.seed;
    for (std::int64_t i = 0; i < opts.count; ++i) {
        char image_name[32];
        char mask_name[32];
        std::snprintf(image_name, sizeof(image_name), "image_%04lld.ppm",
                      static_cast<long long>(i));
        std::snprintf(mask_name, sizeof(mask_name), "mask_%04lld.pgm",
                      static_cast<long long>(i));
        const auto& sample = data[static_cast<std::size_t>(i)];
        write_ppm((fs::path(opts.out) / image_name).string(), sample.image);
        write_pgm((fs::path(opts.out) / mask_name).string(), sample.mask);
        manifest.files.emplace_back(image_name, mask_name);
    }
    write_manifest((fs::path(opts.out) / "manifest.txt").string(), manifest);
    out << "wrote " << opts.count << " samples to " << opts.out << '\n';
}

// --- train -------------------------------------------------------------------------

struct TrainOpts {
    std::string data;
    std::string out;
    TrainConfig cfg;
    std::string gen_channels_text;
    std::string percept_channels_text;
    std::string gen_input_text = "const";
    bool noise = false;
};

void run_train(TrainOpts& opts, std::ostream& out) {
    const fs::path data_dir(opts.data);
    const DatasetManifest manifest =
        read_manifest((data_dir / "manifest.txt").string());
    TrainConfig& cfg = opts.cfg;
    cfg.image_size = manifest.size;
    cfg.num_labels = manifest.labels;
    cfg.noise_enabled = opts.noise;
    if (!opts.gen_channels_text.empty()) {
        cfg.gen_channels = parse_int_list(opts.gen_channels_text, "gen-channels");
        cfg.style_injected =
            std::min<std::int64_t>(cfg.style_injected,
                                   static_cast<std::int64_t>(cfg.gen_channels.size()));
    }
    if (!opts.percept_channels_text.empty()) {
        cfg.percept_channels =
            opts.percept_channels_text == "none"
                ? std::vector<std::int64_t>{}
                : parse_int_list(opts.percept_channels_text, "percept-channels");
    }
    if (opts.gen_input_text == "const") {
        cfg.gen_input = GenInput::learned_const;
    } else if (opts.gen_input_text == "mask") {
        cfg.gen_input = GenInput::mask;
    } else {
        fail("cli: --gen-input must be 'const' or 'mask', got '", opts.gen_input_text,
             "'");
    }
    cfg.out_dir = opts.out;

    std::vector<SynthSample> samples;
    samples.reserve(manifest.files.size());
    for (const auto& [image_name, mask_name] : manifest.files) {
        SynthSample s;
        s.image = read_ppm((data_dir / image_name).string());
        s.mask = read_pgm((data_dir / mask_name).string());
        samples.push_back(std::move(s));
    }

    TrainState state = make_train_state(cfg);
    TrainResult result = train(state, samples);
    out << "steps " << cfg.steps << '\n';
    if (!result.log.empty()) {
        const TrainLogRow& last = result.log.back();
        out << "final_loss_d " << last.loss_d << '\n';
        out << "final_loss_g " << last.loss_g << '\n';
        out << "final_psnr " << last.psnr << '\n';
    }
    out << "checkpoint " << (fs::path(opts.out) / "checkpoint.ckpt").string() << '\n';
    out << "log " << (fs::path(opts.out) / "log.csv").string() << '\n';
}

// --- reconstruct -------------------------------------------------------------------

struct ReconstructOpts {
    std::string checkpoint;
    std::string image;
    std::string mask;
    std::string out_path;
    bool quantized_metrics = false;
};

void run_reconstruct(const ReconstructOpts& opts, std::ostream& out) {
    TrainState state = load_train_state(opts.checkpoint);
    const Tensor image = read_ppm(opts.image);
    const LabelMap mask = read_pgm(opts.mask);
    StyleMatrix style;
    {
        NoGradGuard guard;
        style = style_encoder_forward(state.models.encoder, as_batch(image), mask);
    }
    const Tensor recon = generate_single(state, style, mask);
    write_ppm(opts.out_path, recon);
    const Tensor scored = opts.quantized_metrics ? quantize_roundtrip(recon) : recon;
    print_image_metrics(out, scored, image);
    out << "output " << opts.out_path << '\n';
}

// --- edit --------------------------------------------------------------------------

struct EditOpts {
    std::string checkpoint;
    std::string mask;
    std::string out_path;
    std::vector<std::string> assignments;
};

void run_edit(const EditOpts& opts, std::ostream& out, std::ostream& err) {
    TrainState state = load_train_state(opts.checkpoint);
    const LabelMap mask = read_pgm(opts.mask);
    StyleMatrix st = zero_style_matrix(state);
    const std::int64_t s = state.cfg.num_labels;
    const std::int64_t d = state.cfg.style_dim;

    std::map<std::pair<std::string, std::string>, StyleMatrix> cache;
    for (const std::string& group : opts.assignments) {
        std::istringstream is(group);
        std::string item;
        while (std::getline(is, item, ',')) {
            const auto eq = item.find('=');
            check(eq != std::string::npos && eq > 0,
                  "cli: assignment must be <region>=<image.ppm>:<mask.pgm>, got '",
                  item, "'");
            std::int64_t region = 0;
            try {
                region = std::stoll(item.substr(0, eq));
            } catch (const std::exception&) {
                fail("cli: bad region index in assignment '", item, "'");
            }
            check(region >= 0 && region < s, "cli: region ", region,
                  " outside [0, ", s, ")");
            const StyleSource src = parse_source(item.substr(eq + 1));
            auto key = std::make_pair(src.image, src.mask);
            auto it = cache.find(key);
            if (it == cache.end()) {
                it = cache.emplace(key, encode_style(state, src)).first;
            }
            const StyleMatrix& enc = it->second;
            if (!enc.present[static_cast<std::size_t>(region)]) {
                err << "warning: region " << region << " has no pixels in '"
                    << src.mask << "'; using zero style" << '\n';
                continue;
            }
            for (std::int64_t row = 0; row < d; ++row) {
                st.codes.data()[row * s + region] = enc.codes.data()[row * s + region];
            }
            st.present[static_cast<std::size_t>(region)] = 1;
        }
    }
    const Tensor image = generate_single(state, st, mask);
    write_ppm(opts.out_path, image);
    out << "output " << opts.out_path << '\n';
}

// --- interpolate -------------------------------------------------------------------

struct InterpolateOpts {
    std::string checkpoint;
    std::string mask;
    std::string style_a;
    std::string style_b;
    std::string regions_text;
    std::string out_path;
    double t = 0.0;
};

void run_interpolate(const InterpolateOpts& opts, std::ostream& out) {
    check(opts.t >= 0.0 && opts.t <= 1.0, "cli: t must lie in [0, 1], got ", opts.t);
    TrainState state = load_train_state(opts.checkpoint);
    const LabelMap mask = read_pgm(opts.mask);
    const StyleMatrix st_a = encode_style(state, parse_source(opts.style_a));
    const StyleMatrix st_b = encode_style(state, parse_source(opts.style_b));

    const std::int64_t s = state.cfg.num_labels;
    const std::int64_t d = state.cfg.style_dim;
    std::vector<std::int64_t> regions;
    if (opts.regions_text.empty()) {
        regions.resize(static_cast<std::size_t>(s));
        for (std::int64_t r = 0; r < s; ++r) regions[static_cast<std::size_t>(r)] = r;
    } else {
        regions = parse_int_list(opts.regions_text, "regions");
        for (std::int64_t r : regions) {
            check(r >= 0 && r < s, "cli: region ", r, " outside [0, ", s, ")");
        }
    }

    // unselected regions keep style A; endpoints copy columns bitwise
    StyleMatrix st = clone_style_matrix(st_a);
    const double t = opts.t;
    for (std::int64_t r : regions) {
        const auto ri = static_cast<std::size_t>(r);
        if (t == 0.0) continue;
        if (t == 1.0) {
            for (std::int64_t row = 0; row < d; ++row) {
                st.codes.data()[row * s + r] = st_b.codes.data()[row * s + r];
            }
            st.present[ri] = st_b.present[ri];
            continue;
        }
        for (std::int64_t row = 0; row < d; ++row) {
            st.codes.data()[row * s + r] = (1.0 - t) * st_a.codes.data()[row * s + r] +
                                           t * st_b.codes.data()[row * s + r];
        }
        st.present[ri] = (st_a.present[ri] || st_b.present[ri]) ? 1 : 0;
    }
    const Tensor image = generate_single(state, st, mask);
    write_ppm(opts.out_path, image);
    out << "output " << opts.out_path << '\n';
}

// --- crossover ---------------------------------------------------------------------

struct CrossoverOpts {
    std::string checkpoint;
    std::string mask;
    std::string style_a;
    std::string style_b;
    std::string selection;
    std::string out_path;
};

void run_crossover(const CrossoverOpts& opts, std::ostream& out) {
    TrainState state = load_train_state(opts.checkpoint);
    const LabelMap mask = read_pgm(opts.mask);
    const StyleMatrix st_a = encode_style(state, parse_source(opts.style_a));
    const StyleMatrix st_b = encode_style(state, parse_source(opts.style_b));
    std::vector<int> selection;
    selection.reserve(opts.selection.size());
    for (char c : opts.selection) {
        check(c == '0' || c == '1', "cli: selection must be a bitstring, got '",
              opts.selection, "'");
        selection.push_back(c - '0');
    }
    Tensor image;
    {
        NoGradGuard guard;
        image = squeeze_batch(
            crossover_forward(state.models.generator, st_a, st_b, selection, mask));
    }
    write_ppm(opts.out_path, image);
    out << "output " << opts.out_path << '\n';
}

// --- metrics -----------------------------------------------------------------------

struct MetricsOpts {
    std::string a;
    std::string b;
    std::string pred_mask;
    std::string true_mask;
};

void run_metrics(const MetricsOpts& opts, std::ostream& out) {
    if (!opts.a.empty() || !opts.b.empty()) {
        check(!opts.a.empty() && !opts.b.empty(),
              "cli: --a and --b must be given together");
        const Tensor a = read_ppm(opts.a);
        const Tensor b = read_ppm(opts.b);
        print_image_metrics(out, a, b);
    }
    if (!opts.pred_mask.empty() || !opts.true_mask.empty()) {
        check(!opts.pred_mask.empty() && !opts.true_mask.empty(),
              "cli: --pred-mask and --true-mask must be given together");
        const LabelMap pred = read_pgm(opts.pred_mask);
        const LabelMap truth = read_pgm(opts.true_mask);
        std::int32_t max_label = 0;
        for (std::int32_t v : pred.labels) max_label = std::max(max_label, v);
        for (std::int32_t v : truth.labels) max_label = std::max(max_label, v);
        const SegScores scores = segmentation_scores(pred, truth, max_label + 1);
        out << "miou " << scores.miou << '\n';
        out << "accu " << scores.accu << '\n';
    }
    check(!opts.a.empty() || !opts.pred_mask.empty(),
          "cli: nothing to compare; pass --a/--b or --pred-mask/--true-mask");
}

} // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err) {
    out.precision(17);
    CLI::App app{"region-adaptive semantic image synthesis toolkit"};
    app.name("sean");
    app.require_subcommand(1);

    // --config is expanded before CLI11 sees the arguments; the option is
    // registered per subcommand so it shows up in help
    static const char* kConfigHelp = "read option defaults from a key = value file";
    std::string config_file;

    GenDataOpts gen_opts;
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
    gen->add_option("--config", config_file, kConfigHelp);
    gen->add_option("--out", gen_opts.out, "output directory")->required();
    gen->add_option("--count", gen_opts.count, "number of samples");
    gen->add_option("--labels", gen_opts.labels, "number of region labels");
    gen->add_option("--size", gen_opts.size, "image side length");
    gen->add_option("--seed", gen_opts.seed, "dataset seed");
    gen->callback([&] { run_gen_data(gen_opts, out); });

    TrainOpts train_opts;
    auto* tr = app.add_subcommand("train", "train on a generated dataset");
    tr->add_option("--config", config_file, kConfigHelp);
    tr->add_option("--data", train_opts.data, "dataset directory")->required();
    tr->add_option("--out", train_opts.out, "run directory")->required();
    tr->add_option("--steps", train_opts.cfg.steps, "training steps");
    tr->add_option("--seed", train_opts.cfg.seed, "training seed");
    tr->add_option("--batch-size", train_opts.cfg.batch_size, "batch size");
    tr->add_option("--lr-g", train_opts.cfg.lr_g, "generator/encoder learning rate");
    tr->add_option("--lr-d", train_opts.cfg.lr_d, "discriminator learning rate");
    tr->add_option("--beta1", train_opts.cfg.beta1, "adam beta1");
    tr->add_option("--beta2", train_opts.cfg.beta2, "adam beta2");
    tr->add_option("--adam-eps", train_opts.cfg.adam_eps, "adam epsilon");
    tr->add_option("--lambda-fm", train_opts.cfg.weights.lambda_fm,
                   "feature matching weight");
    tr->add_option("--lambda-percept", train_opts.cfg.weights.lambda_percept,
                   "perceptual weight");
    tr->add_option("--log-interval", train_opts.cfg.log_interval, "steps per log row");
    tr->add_option("--checkpoint-interval", train_opts.cfg.checkpoint_interval,
                   "steps per periodic checkpoint");
    tr->add_option("--style-dim", train_opts.cfg.style_dim, "style code dimension");
    tr->add_option("--gen-input", train_opts.gen_input_text,
                   "generator input: const or mask");
    tr->add_option("--gen-base-resolution", train_opts.cfg.gen_base_resolution,
                   "generator base resolution");
    tr->add_option("--gen-channels", train_opts.gen_channels_text,
                   "comma-separated resblk channels");
    tr->add_option("--style-injected", train_opts.cfg.style_injected,
                   "number of style-injected resblks");
    tr->add_option("--sean-hidden", train_opts.cfg.sean_hidden,
                   "modulation hidden width");
    tr->add_option("--sean-kernel", train_opts.cfg.sean_kernel, "modulation kernel");
    tr->add_option("--enc-base-channels", train_opts.cfg.enc_base_channels,
                   "encoder base width");
    tr->add_option("--enc-max-channels", train_opts.cfg.enc_max_channels,
                   "encoder width cap");
    tr->add_option("--enc-downsamples", train_opts.cfg.enc_downsamples,
                   "encoder downsampling count");
    tr->add_option("--disc-scales", train_opts.cfg.disc_scales,
                   "discriminator scales");
    tr->add_option("--disc-layers", train_opts.cfg.disc_layers,
                   "discriminator layers per scale");
    tr->add_option("--disc-base-channels", train_opts.cfg.disc_base_channels,
                   "discriminator base width");
    tr->add_option("--disc-max-channels", train_opts.cfg.disc_max_channels,
                   "discriminator width cap");
    tr->add_option("--percept-channels", train_opts.percept_channels_text,
                   "perceptual pyramid widths, or 'none'");
    tr->add_flag("--noise", train_opts.noise, "enable per-pixel noise injection");
    tr->callback([&] { run_train(train_opts, out); });

    ReconstructOpts rec_opts;
    auto* rec = app.add_subcommand("reconstruct", "reconstruct an image");
    rec->add_option("--config", config_file, kConfigHelp);
    rec->add_option("--checkpoint", rec_opts.checkpoint, "trained checkpoint")
        ->required();
    rec->add_option("--image", rec_opts.image, "input image (ppm)")->required();
    rec->add_option("--mask", rec_opts.mask, "input mask (pgm)")->required();
    rec->add_option("--out", rec_opts.out_path, "output image path")->required();
    rec->add_flag("--quantized-metrics", rec_opts.quantized_metrics,
                  "score the 8-bit quantized output instead of the raw one");
    rec->callback([&] { run_reconstruct(rec_opts, out); });

    EditOpts edit_opts;
    auto* ed = app.add_subcommand("edit", "generate with per-region styles");
    ed->add_option("--config", config_file, kConfigHelp);
    ed->add_option("--checkpoint", edit_opts.checkpoint, "trained checkpoint")
        ->required();
    ed->add_option("--mask", edit_opts.mask, "generation mask (pgm)")->required();
    ed->add_option("--out", edit_opts.out_path, "output image path")->required();
    ed->add_option("--assign", edit_opts.assignments,
                   "region style assignments <r>=<image.ppm>:<mask.pgm>[,...]");
    ed->callback([&] { run_edit(edit_opts, out, err); });

    InterpolateOpts interp_opts;
    auto* interp = app.add_subcommand("interpolate", "blend two style sources");
    interp->add_option("--config", config_file, kConfigHelp);
    interp->add_option("--checkpoint", interp_opts.checkpoint, "trained checkpoint")
        ->required();
    interp->add_option("--mask", interp_opts.mask, "generation mask (pgm)")
        ->required();
    interp->add_option("--style-a", interp_opts.style_a,
                       "style source A <image.ppm>:<mask.pgm>")
        ->required();
    interp->add_option("--style-b", interp_opts.style_b,
                       "style source B <image.ppm>:<mask.pgm>")
        ->required();
    interp->add_option("--t", interp_opts.t, "blend factor in [0,1]")->required();
    interp->add_option("--regions", interp_opts.regions_text,
                       "comma-separated region subset (default: all)");
    interp->add_option("--out", interp_opts.out_path, "output image path")->required();
    interp->callback([&] { run_interpolate(interp_opts, out); });

    CrossoverOpts cross_opts;
    auto* cross = app.add_subcommand("crossover", "per-block style selection");
    cross->add_option("--config", config_file, kConfigHelp);
    cross->add_option("--checkpoint", cross_opts.checkpoint, "trained checkpoint")
        ->required();
    cross->add_option("--mask", cross_opts.mask, "generation mask (pgm)")->required();
    cross->add_option("--style-a", cross_opts.style_a,
                      "style source A <image.ppm>:<mask.pgm>")
        ->required();
    cross->add_option("--style-b", cross_opts.style_b,
                      "style source B <image.ppm>:<mask.pgm>")
        ->required();
    cross->add_option("--selection", cross_opts.selection,
                      "per-block bitstring, 0 picks A, 1 picks B")
        ->required();
    cross->add_option("--out", cross_opts.out_path, "output image path")->required();
    cross->callback([&] { run_crossover(cross_opts, out); });

    MetricsOpts metrics_opts;
    auto* met = app.add_subcommand("metrics", "compare images and masks");
    met->add_option("--config", config_file, kConfigHelp);
    met->add_option("--a", metrics_opts.a, "first image (ppm)");
    met->add_option("--b", metrics_opts.b, "second image (ppm)");
    met->add_option("--pred-mask", metrics_opts.pred_mask, "predicted mask (pgm)");
    met->add_option("--true-mask", metrics_opts.true_mask, "reference mask (pgm)");
    met->callback([&] { run_metrics(metrics_opts, out); });

    try {
        const std::vector<std::string> expanded = apply_config(args);
        std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        auto parsed = app.get_subcommands();
        out << (parsed.empty() ? app.help() : parsed.front()->help());
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

} // namespace sean
