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

#ifndef SEAN_TRAINING_HPP
#define SEAN_TRAINING_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "sean/checkpoint.hpp"
#include "sean/losses.hpp"
#include "sean/networks.hpp"
#include "sean/regions.hpp"
#include "sean/tensor.hpp"

namespace sean {

// --- configuration --------------------------------------------------------------------

struct TrainConfig {
    // optimization (two-timescale: the discriminator runs 4x faster)
    double lr_g = 1e-4;
    double lr_d = 4e-4;
    double beta1 = 0.0;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::int64_t batch_size = 4;
    std::int64_t steps = 2000;
    std::uint64_t seed = 1;
    LossWeights weights;

    // data and model geometry
    std::int64_t image_size = 32;
    std::int64_t num_labels = 3;
    std::int64_t style_dim = 32;
    bool noise_enabled = false;
    GenInput gen_input = GenInput::learned_const;

    // generator
    std::int64_t gen_base_resolution = 4;
    std::vector<std::int64_t> gen_channels = {48, 32, 16};
    std::int64_t style_injected = 3;
    std::int64_t sean_hidden = 12;
    std::int64_t sean_kernel = 3;

    // style encoder
    std::int64_t enc_base_channels = 12;
    std::int64_t enc_max_channels = 64;
    std::int64_t enc_downsamples = 2;

    // discriminator
    std::int64_t disc_scales = 2;
    std::int64_t disc_layers = 2;
    std::int64_t disc_base_channels = 12;
    std::int64_t disc_max_channels = 64;

    // perceptual feature pyramid; empty means raw pixels (identity extractor)
    std::vector<std::int64_t> percept_channels = {6, 12};

    // logging and checkpoints; out_dir empty disables all file output
    std::int64_t log_interval = 50;
    std::int64_t checkpoint_interval = 500;
    std::string out_dir;
};

// --- optimizer -------------------------------------------------------------------------

struct AdamState {
    Tensor m;
    Tensor v;
};

// Bias-corrected ADAM update for one parameter. Requires a populated
// gradient and t >= 1; clears the gradient after applying the update.
void adam_step(Tensor& p, AdamState& st, double lr, double beta1, double beta2,
               double eps, std::int64_t t);

// Shared step counter across a parameter group. step() only touches
// parameters that carry a gradient, so optimizers for disjoint networks can
// coexist on one tape without cross-talk.
struct AdamOptimizer {
    double lr = 1e-4;
    double beta1 = 0.0;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t t = 0;

    struct Entry {
        std::string name;
        Tensor param;
        AdamState state;
    };
    std::vector<Entry> entries;

    void add(const std::string& name, const Tensor& param);
    void zero_grads();
    void step();
};

// --- synthetic data ----------------------------------------------------------------

struct SynthSample {
    Tensor image;                            // [3, size, size], values in [-1, 1]
    LabelMap mask;                           // labels in [0, num_labels)
    std::vector<std::uint64_t> style_seeds;  // one texture seed per label
};

// Voronoi partitions with seeded per-region textures (base color plus
// sinusoidal stripes). Every label owns at least one pixel by construction.
std::vector<SynthSample> gen_synthetic_dataset(std::int64_t count,
                                               std::int64_t num_labels,
                                               std::int64_t image_size,
                                               std::uint64_t seed);

// --- train state -------------------------------------------------------------------

struct Models {
    StyleEncoder encoder;
    Generator generator;
    Discriminator discriminator;
};

struct TrainState {
    TrainConfig cfg;
    Models models;
    AdamOptimizer opt_ge;  // encoder + generator, lr_g
    AdamOptimizer opt_d;   // discriminator, lr_d
    std::int64_t step = 0;
};

TrainState make_train_state(const TrainConfig& cfg);

// Frozen feature pyramid used by the perceptual loss (and by feature-space
// statistics); derived deterministically from cfg.seed.
std::unique_ptr<FeatureExtractor> make_extractor(const TrainConfig& cfg);

// Full serialization: parameters, spectral vectors, ADAM moments, step
// counters, and the config itself. load reconstructs the exact state.
CheckpointEntries train_state_entries(TrainState& state);
void save_train_state(TrainState& state, const std::string& path);
TrainState load_train_state(const std::string& path);

// --- training loop -----------------------------------------------------------------

struct TrainLogRow {
    std::int64_t step = 0;  // 1-based step index at logging time
    double loss_d = 0.0;
    double loss_g = 0.0;
    double loss_fm = 0.0;
    double loss_percept = 0.0;
    double psnr = 0.0;
    double enc_grad_norm = 0.0;  // in-memory diagnostics, not part of the CSV
    double gen_grad_norm = 0.0;
};

struct TrainResult {
    std::vector<TrainLogRow> log;
};

// `step,loss_d,loss_g,loss_fm,loss_percept,psnr` plus one row per log entry
std::string log_csv(const std::vector<TrainLogRow>& log);

using StepObserver = std::function<void(std::int64_t step, TrainState& state)>;

// Runs cfg.steps alternating D / G+E updates starting from state.step.
// Deterministic for a fixed seed; aborts with diagnostics if a loss goes
// non-finite. With out_dir set, writes log.csv, periodic checkpoints, and a
// final checkpoint.ckpt.
TrainResult train(TrainState& state, std::span<const SynthSample> data,
                  const StepObserver& observer = {});

} // namespace sean

#endif // SEAN_TRAINING_HPP
