#pragma once

#include "glk/data_model.hpp"
#include "glk/errors.hpp"
#include "glk/gefm.hpp"
#include "glk/guide_bank.hpp"
#include "glk/metrics.hpp"
#include "glk/parallel.hpp"
#include "glk/positional_encoding.hpp"
#include "glk/query_gen.hpp"
#include "glk/rng.hpp"
#include "glk/synth.hpp"
#include "glk/tensor.hpp"
