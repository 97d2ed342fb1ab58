#pragma once

#include "skelcap/corpus.hpp"
#include "skelcap/errors.hpp"
#include "skelcap/nn/adam.hpp"
#include "skelcap/nn/checkpoint.hpp"
#include "skelcap/nn/grad_check.hpp"
#include "skelcap/nn/model.hpp"
#include "skelcap/nn/trainer.hpp"
#include "skelcap/skeleton.hpp"
#include "skelcap/synth.hpp"
#include "skelcap/text.hpp"
#include "skelcap/text_metrics.hpp"
#include "skelcap/tokenizer.hpp"
