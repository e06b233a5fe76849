// Copyright 2026 The aklt-prep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/// @file
/// Umbrella header for the whole library.

#pragma once

#include "aklt/error.hpp"
#include "aklt/linalg.hpp"
#include "aklt/mps.hpp"
#include "aklt/noise.hpp"
#include "aklt/observables.hpp"
#include "aklt/protocol.hpp"
#include "aklt/shots.hpp"
#include "aklt/sim.hpp"
#include "aklt/teleport.hpp"
#include "aklt/variants.hpp"
#include "aklt/version.hpp"
