//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include "moco/nn/adam.hpp"
#include "moco/nn/checkpoint.hpp"
#include "moco/nn/fused.hpp"
#include "moco/nn/layers.hpp"
#include "moco/nn/ops.hpp"
#include "moco/nn/tensor.hpp"
#include "moco/nn/gradcheck.hpp"
