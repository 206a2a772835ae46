//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include "moco/encoders/batch.hpp"
#include "moco/encoders/config.hpp"
#include "moco/encoders/fingerprint.hpp"
#include "moco/encoders/gin.hpp"
#include "moco/encoders/mlm.hpp"
#include "moco/encoders/schnet.hpp"
#include "moco/encoders/smiles.hpp"
