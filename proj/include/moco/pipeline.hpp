//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include "moco/pipeline/dataset.hpp"
#include "moco/pipeline/finetune.hpp"
#include "moco/pipeline/metrics.hpp"
#include "moco/pipeline/model.hpp"
#include "moco/pipeline/pretrain.hpp"
#include "moco/pipeline/probe.hpp"
#include "moco/pipeline/split.hpp"
