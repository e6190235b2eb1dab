#pragma once

#include "snrsel/harness.hpp"
#include "snrsel/sigsynth.hpp"
#include "snrsel/strategies.hpp"

namespace fixtures {

using namespace snrsel;

// Two easily separated classes over four SNRs, small enough to train in milliseconds.
inline DatasetSpec tiny_spec(std::size_t frames_per_cell = 40, std::size_t grid = 4) {
    DatasetSpec s;
    s.classes = {ModType::kBpsk, ModType::kGfsk};
    s.grid = SnrGrid(-4, 4, grid);
    s.frames_per_cell = frames_per_cell;
    s.frame_len = 32;
    s.master_seed = 17;
    return s;
}

inline ArchConfig tiny_arch(const DatasetSpec& s) {
    ArchConfig a;
    a.input_len = s.frame_len;
    a.hidden = {8};
    a.n_classes = s.classes.size();
    return a;
}

inline TrainConfig tiny_train() {
    TrainConfig t;
    t.batch_size = 16;
    t.max_epochs = 8;
    t.early_stop_patience = 2;
    t.learning_rate = 3e-3;
    return t;
}

inline const Dataset& tiny_dataset() {
    static const Dataset ds = build_dataset(tiny_spec());
    return ds;
}

inline ExperimentConfig tiny_experiment(std::vector<Strategy> strategies) {
    ExperimentConfig c;
    c.dataset = tiny_spec();
    c.arch = tiny_arch(*c.dataset);
    c.train = tiny_train();
    c.strategies = std::move(strategies);
    c.n_seeds = 2;
    c.seed = 5;
    return c;
}

// A label-only lattice: frames carry class and SNR but no samples.
inline Dataset label_lattice(std::size_t classes, const SnrGrid& grid, std::size_t per_cell) {
    Dataset ds;
    for (std::size_t c = 0; c < classes; ++c) ds.class_names.push_back("C" + std::to_string(c));
    ds.grid = grid;
    ds.frame_len = 1;
    ds.frames.reserve(classes * grid.size() * per_cell);
    for (std::size_t c = 0; c < classes; ++c)
        for (std::size_t s = 0; s < grid.size(); ++s)
            for (std::size_t i = 0; i < per_cell; ++i) {
                Frame f;
                f.label = int(c);
                f.snr_db = grid[s];
                f.frame_id = std::int64_t(ds.frames.size());
                ds.frames.push_back(std::move(f));
            }
    return ds;
}

}  // namespace fixtures
