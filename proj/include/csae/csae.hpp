#pragma once

#include "csae/concept_map.hpp"
#include "csae/config.hpp"
#include "csae/dataset.hpp"
#include "csae/errors.hpp"
#include "csae/eval.hpp"
#include "csae/losses.hpp"
#include "csae/numerics.hpp"
#include "csae/optim.hpp"
#include "csae/probe.hpp"
#include "csae/rng.hpp"
#include "csae/sae.hpp"
#include "csae/serde.hpp"
#include "csae/steering.hpp"
#include "csae/store.hpp"
#include "csae/synth.hpp"
#include "csae/train.hpp"
