//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include "moco/chem/canonical.hpp"
#include "moco/chem/element.hpp"
#include "moco/chem/molgraph.hpp"
#include "moco/chem/rings.hpp"
#include "moco/chem/scaffold.hpp"
#include "moco/chem/smiles.hpp"
