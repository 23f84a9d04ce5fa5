#pragma once

#include "csvddnet/errors.hpp"
#include "csvddnet/rng.hpp"
#include "csvddnet/image.hpp"
#include "csvddnet/idx_io.hpp"
#include "csvddnet/pgm_io.hpp"
#include "csvddnet/patches.hpp"
#include "csvddnet/whitening.hpp"
#include "csvddnet/dictionary.hpp"
#include "csvddnet/simplex.hpp"
#include "csvddnet/balls.hpp"
#include "csvddnet/encoder.hpp"
#include "csvddnet/pipeline.hpp"
#include "csvddnet/learner.hpp"
#include "csvddnet/retrieval.hpp"
#include "csvddnet/bundle.hpp"
#include "csvddnet/model_io.hpp"
#include "csvddnet/config.hpp"
