// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "chanpred/adam.hpp"
#include "chanpred/autodiff.hpp"
#include "chanpred/bench.hpp"
#include "chanpred/channel.hpp"
#include "chanpred/config.hpp"
#include "chanpred/dataset_io.hpp"
#include "chanpred/errors.hpp"
#include "chanpred/link.hpp"
#include "chanpred/losses.hpp"
#include "chanpred/metrics.hpp"
#include "chanpred/model_io.hpp"
#include "chanpred/models.hpp"
#include "chanpred/rng.hpp"
#include "chanpred/tensor.hpp"
#include "chanpred/train.hpp"
