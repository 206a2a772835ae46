//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include "moco/featurize/bpe.hpp"
#include "moco/featurize/conformer.hpp"
#include "moco/featurize/morgan.hpp"
#include "moco/featurize/views.hpp"
