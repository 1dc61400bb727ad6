// Umbrella header.
#ifndef SAKT_SAKT_HPP
#define SAKT_SAKT_HPP

#include "sakt/ablation.hpp"
#include "sakt/adam.hpp"
#include "sakt/checkpoint.hpp"
#include "sakt/config.hpp"
#include "sakt/data.hpp"
#include "sakt/evaluation.hpp"
#include "sakt/gradcheck.hpp"
#include "sakt/io.hpp"
#include "sakt/matrix.hpp"
#include "sakt/model.hpp"
#include "sakt/ops.hpp"
#include "sakt/rng.hpp"
#include "sakt/training.hpp"

#endif  // SAKT_SAKT_HPP
