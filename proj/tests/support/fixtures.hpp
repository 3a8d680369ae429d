#pragma once

// Shared small-scale training artifacts. Built once per process; the
// supervised run uses the documented defaults scaled down so the whole
// fixture trains in a couple of seconds.

#include "csae/config.hpp"
#include "csae/eval.hpp"
#include "csae/synth.hpp"
#include "csae/train.hpp"

namespace csae::testing {

struct PipelineFixture {
    SynthSpec spec;
    Dataset data;
    PipelineResult pipe;
};

inline TrainConfig small_unsup_config() {
    TrainConfig cfg;
    cfg.phase = Phase::unsupervised;
    cfg.epochs = 30;
    cfg.batch_size = 16;
    cfg.learning_rate = 1e-3;
    cfg.weights = {1.0 / 32.0, 0.0, 0.0, 0.0};
    cfg.dead_window = 200;
    cfg.seed = 20240501;
    return cfg;
}

inline TrainConfig small_sup_config() {
    TrainConfig cfg;
    cfg.phase = Phase::supervised;
    cfg.epochs = 25;
    cfg.batch_size = 16;
    cfg.learning_rate = 3e-4;
    cfg.weights = {1.0 / 32.0, 3.0, 0.1, 0.01};
    cfg.dead_window = 200;
    cfg.seed = 20240502;
    return cfg;
}

// 4 objects x 3 styles, d=16, T=4, 8 samples per pair.
inline const PipelineFixture& small_pipeline() {
    static const PipelineFixture fixture = [] {
        PipelineFixture f;
        f.spec = make_default_spec(/*seed=*/11, /*objects=*/4, /*styles=*/3, /*d=*/16,
                                   /*timesteps=*/4, /*samples_per_pair=*/8);
        f.data = generate(f.spec);
        const ModelConfig model{/*latents=*/64, /*k=*/4, /*k_aux=*/8};
        f.pipe = run_pipeline(f.data, model, small_unsup_config(), small_sup_config());
        return f;
    }();
    return fixture;
}

inline const Evaluator& small_evaluator() {
    static const Evaluator ev(small_pipeline().pipe.params, small_pipeline().data);
    return ev;
}

}  // namespace csae::testing
