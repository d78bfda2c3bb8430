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

#include "sean/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <utility>

#include "sean/common.hpp"
#include "sean/metrics.hpp"
#include "sean/ops.hpp"
#include "sean/rng.hpp"

namespace sean {

namespace {

constexpr std::uint64_t kSeedMix = 0x9E3779B97F4A7C15ULL;

void validate_config(const TrainConfig& cfg) {
    check(cfg.lr_g > 0.0 && cfg.lr_d > 0.0, "training: learning rates must be positive");
    check(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0 && cfg.beta2 >= 0.0 && cfg.beta2 < 1.0,
          "training: betas must lie in [0, 1)");
    check(cfg.adam_eps > 0.0, "training: adam_eps must be positive");
    check(cfg.batch_size >= 1, "training: batch_size must be >= 1");
    check(cfg.steps >= 0, "training: steps must be >= 0");
    check(cfg.num_labels >= 2, "training: need at least 2 labels");
    check(cfg.log_interval >= 1, "training: log_interval must be >= 1");
    check(cfg.checkpoint_interval >= 1, "training: checkpoint_interval must be >= 1");
    check(cfg.weights.lambda_fm >= 0.0 && cfg.weights.lambda_percept >= 0.0,
          "training: loss weights must be non-negative");
}

} // namespace

// --- optimizer -------------------------------------------------------------------------

void adam_step(Tensor& p, AdamState& st, double lr, double beta1, double beta2,
               double eps, std::int64_t t) {
    check(t >= 1, "adam_step: step index must be >= 1");
    check(p.defined(), "adam_step: undefined parameter");
    check(p.has_grad(), "adam_step: parameter has no gradient");
    check(st.m.defined() && st.v.defined() && st.m.shape() == p.shape() &&
              st.v.shape() == p.shape(),
          "adam_step: moment buffers do not match the parameter");
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    auto g = p.grad();
    double* m = st.m.data();
    double* v = st.v.data();
    double* pd = p.data();
    const std::int64_t n = p.numel();
    for (std::int64_t i = 0; i < n; ++i) {
        const double gi = g[static_cast<std::size_t>(i)];
        m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
        v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        pd[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
    p.zero_grad();
}

void AdamOptimizer::add(const std::string& name, const Tensor& param) {
    check(param.defined(), "optimizer: undefined parameter '", name, "'");
    Entry e;
    e.name = name;
    e.param = param;
    e.state.m = Tensor::zeros(param.shape());
    e.state.v = Tensor::zeros(param.shape());
    entries.push_back(std::move(e));
}

void AdamOptimizer::zero_grads() {
    for (auto& e : entries) e.param.zero_grad();
}

void AdamOptimizer::step() {
    ++t;
    for (auto& e : entries) {
        // Parameters outside the live graph (e.g. noise gains with noise off)
        // pick up no gradient and are left untouched.
        if (e.param.has_grad()) adam_step(e.param, e.state, lr, beta1, beta2, eps, t);
    }
}

// --- synthetic data ----------------------------------------------------------------

std::vector<SynthSample> gen_synthetic_dataset(std::int64_t count,
                                               std::int64_t num_labels,
                                               std::int64_t image_size,
                                               std::uint64_t seed) {
    check(count >= 1, "synthetic dataset: count must be >= 1");
    check(num_labels >= 2, "synthetic dataset: need at least 2 labels");
    check(image_size >= 1 && image_size * image_size >= num_labels,
          "synthetic dataset: image size ", image_size, " is too small for ",
          num_labels, " regions");

    const std::int64_t s = num_labels;
    const std::int64_t hw = image_size;
    std::vector<SynthSample> out;
    out.reserve(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i) {
        Rng rng(seed + kSeedMix * static_cast<std::uint64_t>(i + 1));

        // Distinct Voronoi centers: each label owns at least its own center.
        std::vector<std::pair<std::int64_t, std::int64_t>> centers;
        while (static_cast<std::int64_t>(centers.size()) < s) {
            const auto cy = static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(hw)));
            const auto cx = static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(hw)));
            if (std::find(centers.begin(), centers.end(), std::make_pair(cy, cx)) ==
                centers.end()) {
                centers.emplace_back(cy, cx);
            }
        }

        SynthSample sample;
        sample.mask = LabelMap(hw, hw);
        for (std::int64_t y = 0; y < hw; ++y) {
            for (std::int64_t x = 0; x < hw; ++x) {
                std::int64_t best = 0;
                std::int64_t best_d = std::numeric_limits<std::int64_t>::max();
                for (std::int64_t k = 0; k < s; ++k) {
                    const std::int64_t dy = y - centers[static_cast<std::size_t>(k)].first;
                    const std::int64_t dx = x - centers[static_cast<std::size_t>(k)].second;
                    const std::int64_t d = dy * dy + dx * dx;
                    if (d < best_d) {
                        best_d = d;
                        best = k;
                    }
                }
                sample.mask.at(y, x) = static_cast<std::int32_t>(best);
            }
        }

        sample.style_seeds.resize(static_cast<std::size_t>(s));
        for (std::int64_t k = 0; k < s; ++k) {
            sample.style_seeds[static_cast<std::size_t>(k)] = rng.next_u64();
        }

        // Per-region texture: seeded base color plus one sinusoidal stripe
        // pattern, so region style carries a learnable signal.
        struct Texture {
            double base[3];
            double amp, fy, fx, phase;
        };
        std::vector<Texture> tex(static_cast<std::size_t>(s));
        for (std::int64_t k = 0; k < s; ++k) {
            Rng tr(sample.style_seeds[static_cast<std::size_t>(k)]);
            Texture& t = tex[static_cast<std::size_t>(k)];
            for (double& b : t.base) b = tr.uniform(-0.75, 0.75);
            t.amp = tr.uniform(0.05, 0.18);
            const double theta = tr.uniform(0.0, 3.14159265358979323846);
            const double freq = tr.uniform(0.3, 0.9);
            t.fy = freq * std::sin(theta);
            t.fx = freq * std::cos(theta);
            t.phase = tr.uniform(0.0, 6.28318530717958647692);
        }

        std::vector<double> img(static_cast<std::size_t>(3 * hw * hw));
        for (std::int64_t y = 0; y < hw; ++y) {
            for (std::int64_t x = 0; x < hw; ++x) {
                const Texture& t = tex[static_cast<std::size_t>(sample.mask.at(y, x))];
                const double wave =
                    t.amp * std::sin(t.fy * static_cast<double>(y) +
                                     t.fx * static_cast<double>(x) + t.phase);
                for (std::int64_t c = 0; c < 3; ++c) {
                    img[static_cast<std::size_t>(c * hw * hw + y * hw + x)] =
                        std::clamp(t.base[c] + wave, -1.0, 1.0);
                }
            }
        }
        sample.image = Tensor::from_vector({3, hw, hw}, std::move(img));
        out.push_back(std::move(sample));
    }
    return out;
}

// --- train state -------------------------------------------------------------------

TrainState make_train_state(const TrainConfig& cfg) {
    validate_config(cfg);
    TrainState state;
    state.cfg = cfg;
    Rng rng(cfg.seed);

    EncoderConfig ec;
    ec.style_dim = cfg.style_dim;
    ec.num_labels = cfg.num_labels;
    ec.image_channels = 3;
    ec.base_channels = cfg.enc_base_channels;
    ec.max_channels = cfg.enc_max_channels;
    ec.num_downsamples = cfg.enc_downsamples;
    state.models.encoder = make_style_encoder(ec, rng);

    GeneratorConfig gc;
    gc.image_size = cfg.image_size;
    gc.base_resolution = cfg.gen_base_resolution;
    gc.num_resblks = static_cast<std::int64_t>(cfg.gen_channels.size());
    gc.channels = cfg.gen_channels;
    gc.style_dim = cfg.style_dim;
    gc.num_labels = cfg.num_labels;
    gc.image_channels = 3;
    gc.style_injected = cfg.style_injected;
    gc.sean_hidden = cfg.sean_hidden;
    gc.sean_kernel = cfg.sean_kernel;
    gc.input_mode = cfg.gen_input;
    gc.stats_enabled = true;
    state.models.generator = make_generator(gc, rng);

    DiscriminatorConfig dc;
    dc.num_scales = cfg.disc_scales;
    dc.layers_per_scale = cfg.disc_layers;
    dc.base_channels = cfg.disc_base_channels;
    dc.max_channels = cfg.disc_max_channels;
    dc.num_labels = cfg.num_labels;
    dc.image_channels = 3;
    state.models.discriminator = make_discriminator(dc, rng);

    state.opt_ge.lr = cfg.lr_g;
    state.opt_ge.beta1 = cfg.beta1;
    state.opt_ge.beta2 = cfg.beta2;
    state.opt_ge.eps = cfg.adam_eps;
    state.opt_d.lr = cfg.lr_d;
    state.opt_d.beta1 = cfg.beta1;
    state.opt_d.beta2 = cfg.beta2;
    state.opt_d.eps = cfg.adam_eps;

    state.models.encoder.visit_params(
        [&](const std::string& n, Tensor& t) { state.opt_ge.add("encoder." + n, t); });
    state.models.generator.visit_params(
        [&](const std::string& n, Tensor& t) { state.opt_ge.add("generator." + n, t); });
    state.models.discriminator.visit_params([&](const std::string& n, Tensor& t) {
        state.opt_d.add("discriminator." + n, t);
    });
    return state;
}

std::unique_ptr<FeatureExtractor> make_extractor(const TrainConfig& cfg) {
    if (cfg.percept_channels.empty()) return std::make_unique<IdentityExtractor>();
    Rng rng(cfg.seed * 0x2545F4914F6CDD1DULL + kSeedMix);
    return std::make_unique<RandomConvExtractor>(3, cfg.percept_channels, rng);
}

// --- serialization -----------------------------------------------------------------

namespace {

// int vectors are stored as [n, v0, ..., v(n-1)] so empty vectors round-trip
Tensor encode_int_vector(const std::vector<std::int64_t>& v) {
    std::vector<double> d;
    d.reserve(v.size() + 1);
    d.push_back(static_cast<double>(v.size()));
    for (std::int64_t x : v) d.push_back(static_cast<double>(x));
    const auto n = static_cast<std::int64_t>(d.size());
    return Tensor::from_vector({n}, std::move(d));
}

std::vector<std::int64_t> decode_int_vector(const Tensor& t, const std::string& name) {
    check(t.rank() == 1 && t.numel() >= 1, "checkpoint: malformed vector entry '", name, "'");
    const auto n = static_cast<std::int64_t>(t.data()[0]);
    check(n >= 0 && n + 1 == t.numel(), "checkpoint: malformed vector entry '", name, "'");
    std::vector<std::int64_t> v(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        v[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(t.data()[i + 1]);
    }
    return v;
}

} // namespace

CheckpointEntries train_state_entries(TrainState& state) {
    CheckpointEntries entries;
    const TrainConfig& c = state.cfg;
    auto scalar = [&](const std::string& name, double v) {
        entries.emplace_back(name, Tensor::scalar(v));
    };
    scalar("__config__/lr_g", c.lr_g);
    scalar("__config__/lr_d", c.lr_d);
    scalar("__config__/beta1", c.beta1);
    scalar("__config__/beta2", c.beta2);
    scalar("__config__/adam_eps", c.adam_eps);
    scalar("__config__/batch_size", static_cast<double>(c.batch_size));
    scalar("__config__/steps", static_cast<double>(c.steps));
    scalar("__config__/seed_hi", static_cast<double>(c.seed >> 32));
    scalar("__config__/seed_lo", static_cast<double>(c.seed & 0xffffffffULL));
    scalar("__config__/lambda_fm", c.weights.lambda_fm);
    scalar("__config__/lambda_percept", c.weights.lambda_percept);
    scalar("__config__/image_size", static_cast<double>(c.image_size));
    scalar("__config__/num_labels", static_cast<double>(c.num_labels));
    scalar("__config__/style_dim", static_cast<double>(c.style_dim));
    scalar("__config__/noise_enabled", c.noise_enabled ? 1.0 : 0.0);
    scalar("__config__/gen_input", c.gen_input == GenInput::mask ? 1.0 : 0.0);
    scalar("__config__/gen_base_resolution", static_cast<double>(c.gen_base_resolution));
    entries.emplace_back("__config__/gen_channels", encode_int_vector(c.gen_channels));
    scalar("__config__/style_injected", static_cast<double>(c.style_injected));
    scalar("__config__/sean_hidden", static_cast<double>(c.sean_hidden));
    scalar("__config__/sean_kernel", static_cast<double>(c.sean_kernel));
    scalar("__config__/enc_base_channels", static_cast<double>(c.enc_base_channels));
    scalar("__config__/enc_max_channels", static_cast<double>(c.enc_max_channels));
    scalar("__config__/enc_downsamples", static_cast<double>(c.enc_downsamples));
    scalar("__config__/disc_scales", static_cast<double>(c.disc_scales));
    scalar("__config__/disc_layers", static_cast<double>(c.disc_layers));
    scalar("__config__/disc_base_channels", static_cast<double>(c.disc_base_channels));
    scalar("__config__/disc_max_channels", static_cast<double>(c.disc_max_channels));
    entries.emplace_back("__config__/percept_channels", encode_int_vector(c.percept_channels));
    scalar("__config__/log_interval", static_cast<double>(c.log_interval));
    scalar("__config__/checkpoint_interval", static_cast<double>(c.checkpoint_interval));

    scalar("step", static_cast<double>(state.step));
    scalar("opt_ge.t", static_cast<double>(state.opt_ge.t));
    scalar("opt_d.t", static_cast<double>(state.opt_d.t));

    for (auto* opt : {&state.opt_ge, &state.opt_d}) {
        for (auto& e : opt->entries) {
            entries.emplace_back(e.name, e.param);
            entries.emplace_back(e.name + ".adam_m", e.state.m);
            entries.emplace_back(e.name + ".adam_v", e.state.v);
        }
    }
    state.models.generator.visit_spectral([&](const std::string& n, SpectralState& s) {
        entries.emplace_back("generator." + n + ".u", s.u);
        entries.emplace_back("generator." + n + ".v", s.v);
    });
    state.models.discriminator.visit_spectral([&](const std::string& n, SpectralState& s) {
        entries.emplace_back("discriminator." + n + ".u", s.u);
        entries.emplace_back("discriminator." + n + ".v", s.v);
    });
    return entries;
}

void save_train_state(TrainState& state, const std::string& path) {
    write_checkpoint(path, train_state_entries(state));
}

TrainState load_train_state(const std::string& path) {
    CheckpointEntries file_entries = read_checkpoint(path);
    std::map<std::string, Tensor> by_name;
    for (auto& [name, tensor] : file_entries) {
        check(by_name.emplace(name, tensor).second, "checkpoint: duplicate entry '", name, "'");
    }
    auto take_scalar = [&](const std::string& name) {
        auto it = by_name.find(name);
        check(it != by_name.end(), "checkpoint: missing entry '", name, "'");
        check(it->second.numel() == 1, "checkpoint: entry '", name, "' is not scalar");
        return it->second.value();
    };
    auto take_vector = [&](const std::string& name) {
        auto it = by_name.find(name);
        check(it != by_name.end(), "checkpoint: missing entry '", name, "'");
        return decode_int_vector(it->second, name);
    };

    TrainConfig cfg;
    cfg.lr_g = take_scalar("__config__/lr_g");
    cfg.lr_d = take_scalar("__config__/lr_d");
    cfg.beta1 = take_scalar("__config__/beta1");
    cfg.beta2 = take_scalar("__config__/beta2");
    cfg.adam_eps = take_scalar("__config__/adam_eps");
    cfg.batch_size = static_cast<std::int64_t>(take_scalar("__config__/batch_size"));
    cfg.steps = static_cast<std::int64_t>(take_scalar("__config__/steps"));
    cfg.seed = (static_cast<std::uint64_t>(take_scalar("__config__/seed_hi")) << 32) |
               static_cast<std::uint64_t>(take_scalar("__config__/seed_lo"));
    cfg.weights.lambda_fm = take_scalar("__config__/lambda_fm");
    cfg.weights.lambda_percept = take_scalar("__config__/lambda_percept");
    cfg.image_size = static_cast<std::int64_t>(take_scalar("__config__/image_size"));
    cfg.num_labels = static_cast<std::int64_t>(take_scalar("__config__/num_labels"));
    cfg.style_dim = static_cast<std::int64_t>(take_scalar("__config__/style_dim"));
    cfg.noise_enabled = take_scalar("__config__/noise_enabled") != 0.0;
    cfg.gen_input = take_scalar("__config__/gen_input") != 0.0 ? GenInput::mask
                                                               : GenInput::learned_const;
    cfg.gen_base_resolution =
        static_cast<std::int64_t>(take_scalar("__config__/gen_base_resolution"));
    cfg.gen_channels = take_vector("__config__/gen_channels");
    cfg.style_injected = static_cast<std::int64_t>(take_scalar("__config__/style_injected"));
    cfg.sean_hidden = static_cast<std::int64_t>(take_scalar("__config__/sean_hidden"));
    cfg.sean_kernel = static_cast<std::int64_t>(take_scalar("__config__/sean_kernel"));
    cfg.enc_base_channels =
        static_cast<std::int64_t>(take_scalar("__config__/enc_base_channels"));
    cfg.enc_max_channels =
        static_cast<std::int64_t>(take_scalar("__config__/enc_max_channels"));
    cfg.enc_downsamples =
        static_cast<std::int64_t>(take_scalar("__config__/enc_downsamples"));
    cfg.disc_scales = static_cast<std::int64_t>(take_scalar("__config__/disc_scales"));
    cfg.disc_layers = static_cast<std::int64_t>(take_scalar("__config__/disc_layers"));
    cfg.disc_base_channels =
        static_cast<std::int64_t>(take_scalar("__config__/disc_base_channels"));
    cfg.disc_max_channels =
        static_cast<std::int64_t>(take_scalar("__config__/disc_max_channels"));
    cfg.percept_channels = take_vector("__config__/percept_channels");
    cfg.log_interval = static_cast<std::int64_t>(take_scalar("__config__/log_interval"));
    cfg.checkpoint_interval =
        static_cast<std::int64_t>(take_scalar("__config__/checkpoint_interval"));

    TrainState state = make_train_state(cfg);
    state.step = static_cast<std::int64_t>(take_scalar("step"));
    state.opt_ge.t = static_cast<std::int64_t>(take_scalar("opt_ge.t"));
    state.opt_d.t = static_cast<std::int64_t>(take_scalar("opt_d.t"));

    // Strict matching: the file and the reconstructed state must agree on the
    // exact entry set; payloads are copied into the live tensors.
    CheckpointEntries expected = train_state_entries(state);
    check(expected.size() == by_name.size(),
          "checkpoint: entry count mismatch (file has ", by_name.size(), ", expected ",
          expected.size(), ")");
    for (auto& [name, live] : expected) {
        auto it = by_name.find(name);
        check(it != by_name.end(), "checkpoint: missing entry '", name, "'");
        const Tensor& src = it->second;
        check(src.shape() == live.shape(), "checkpoint: shape mismatch for entry '", name,
              "'");
        std::memcpy(live.data(), src.data(),
                    static_cast<std::size_t>(live.numel()) * sizeof(double));
    }
    return state;
}

// --- training loop -----------------------------------------------------------------

std::string log_csv(const std::vector<TrainLogRow>& log) {
    std::ostringstream os;
    os.precision(17);
    os << "step,loss_d,loss_g,loss_fm,loss_percept,psnr\n";
    for (const auto& r : log) {
        os << r.step << ',' << r.loss_d << ',' << r.loss_g << ',' << r.loss_fm << ','
           << r.loss_percept << ',' << r.psnr << '\n';
    }
    return os.str();
}

namespace {

double grad_l2_norm(const std::vector<AdamOptimizer::Entry>& entries,
                    const std::string& prefix) {
    double acc = 0.0;
    for (const auto& e : entries) {
        if (e.name.rfind(prefix, 0) != 0 || !e.param.has_grad()) continue;
        for (double g : e.param.grad()) acc += g * g;
    }
    return std::sqrt(acc);
}

std::string join_indices(const std::vector<std::int64_t>& idx) {
    std::ostringstream os;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (i) os << ' ';
        os << idx[i];
    }
    return os.str();
}

} // namespace

TrainResult train(TrainState& state, std::span<const SynthSample> data,
                  const StepObserver& observer) {
    TrainConfig& cfg = state.cfg;
    validate_config(cfg);
    check(!data.empty(), "training: dataset is empty");
    for (const SynthSample& s : data) {
        check(s.image.defined() &&
                  s.image.shape() == Shape({3, cfg.image_size, cfg.image_size}),
              "training: sample image shape does not match the configured size");
        check(s.mask.height == cfg.image_size && s.mask.width == cfg.image_size,
              "training: sample mask shape does not match the configured size");
    }

    auto extractor = make_extractor(cfg);
    Rng noise_rng(cfg.seed ^ kSeedMix);
    const auto n = static_cast<std::int64_t>(data.size());
    const std::int64_t batch = cfg.batch_size;

    if (!cfg.out_dir.empty()) std::filesystem::create_directories(cfg.out_dir);

    TrainResult result;
    const std::int64_t start = state.step;
    for (std::int64_t local = 0; local < cfg.steps; ++local) {
        const std::int64_t step = start + local;
        Tape::get().clear();
        state.opt_ge.zero_grads();
        state.opt_d.zero_grads();

        // deterministic batch cycling
        std::vector<std::int64_t> idx(static_cast<std::size_t>(batch));
        std::vector<Tensor> image_list;
        std::vector<LabelMap> mask_list;
        image_list.reserve(static_cast<std::size_t>(batch));
        mask_list.reserve(static_cast<std::size_t>(batch));
        for (std::int64_t b = 0; b < batch; ++b) {
            const std::int64_t k = (step * batch + b) % n;
            idx[static_cast<std::size_t>(b)] = k;
            image_list.push_back(data[static_cast<std::size_t>(k)].image);
            mask_list.push_back(data[static_cast<std::size_t>(k)].mask);
        }
        const Tensor real = stack_batch(image_list);

        // one shared encoder + generator forward; reused for both phases
        std::vector<StyleMatrix> styles =
            style_encoder_forward(state.models.encoder, real, mask_list);
        Tensor fake = generator_forward(state.models.generator, styles, mask_list,
                                        &noise_rng, cfg.noise_enabled,
                                        /*update_spectral=*/true);

        // discriminator phase on (real, fake detached)
        const Tensor fake_det = fake.detach();
        DiscriminatorOutput d_real =
            discriminator_forward(state.models.discriminator, real, mask_list,
                                  /*update_spectral=*/true);
        DiscriminatorOutput d_fake =
            discriminator_forward(state.models.discriminator, fake_det, mask_list);
        const Tensor loss_d = hinge_d_loss(d_real.logits, d_fake.logits);
        const double loss_d_v = loss_d.value();
        check(std::isfinite(loss_d_v), "training: non-finite discriminator loss ",
              loss_d_v, " at step ", step + 1, " (batch indices ", join_indices(idx),
              ")");
        backward(loss_d);
        state.opt_d.step();

        // generator + encoder phase against the updated discriminator
        DiscriminatorOutput g_fake =
            discriminator_forward(state.models.discriminator, fake, mask_list);
        DiscriminatorOutput g_real =
            discriminator_forward(state.models.discriminator, real, mask_list);
        const Tensor adv = hinge_g_loss(g_fake.logits);
        const Tensor fm = feature_matching_loss(g_real.features, g_fake.features);
        const Tensor percept = perceptual_loss(real, fake, *extractor);
        const Tensor loss_g = total_g_loss(adv, fm, percept, cfg.weights);
        const double loss_g_v = loss_g.value();
        const double fm_v = fm.value();
        const double percept_v = percept.value();
        check(std::isfinite(loss_g_v) && std::isfinite(fm_v) && std::isfinite(percept_v),
              "training: non-finite generator loss ", loss_g_v, " (fm ", fm_v,
              ", percept ", percept_v, ") at step ", step + 1, " (batch indices ",
              join_indices(idx), ")");
        backward(loss_g);
        const double enc_norm = grad_l2_norm(state.opt_ge.entries, "encoder.");
        const double gen_norm = grad_l2_norm(state.opt_ge.entries, "generator.");
        state.opt_ge.step();

        double batch_psnr = 0.0;
        {
            NoGradGuard guard;
            const Tensor fake01 = mul_scalar(add_scalar(fake_det, 1.0), 0.5);
            const Tensor real01 = mul_scalar(add_scalar(real, 1.0), 0.5);
            batch_psnr = psnr(fake01, real01);
        }

        state.step = step + 1;
        if ((step + 1 - start) % cfg.log_interval == 0) {
            TrainLogRow row;
            row.step = step + 1;
            row.loss_d = loss_d_v;
            row.loss_g = loss_g_v;
            row.loss_fm = fm_v;
            row.loss_percept = percept_v;
            row.psnr = batch_psnr;
            row.enc_grad_norm = enc_norm;
            row.gen_grad_norm = gen_norm;
            result.log.push_back(row);
        }
        if (!cfg.out_dir.empty() && (step + 1 - start) % cfg.checkpoint_interval == 0) {
            save_train_state(state, cfg.out_dir + "/checkpoint_step" +
                                        std::to_string(step + 1) + ".ckpt");
        }
        if (observer) observer(step + 1, state);
    }
    Tape::get().clear();

    if (!cfg.out_dir.empty()) {
        save_train_state(state, cfg.out_dir + "/checkpoint.ckpt");
        std::ofstream log_file(cfg.out_dir + "/log.csv", std::ios::trunc);
        check(log_file.good(), "training: cannot write log file in '", cfg.out_dir, "'");
        log_file << log_csv(result.log);
        log_file.flush();
        check(log_file.good(), "training: log write failed");
    }
    return result;
}

} // namespace sean
