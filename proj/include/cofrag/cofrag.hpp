// Copyright 2026 The cofrag Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "cofrag/bounds.hpp"
#include "cofrag/config.hpp"
#include "cofrag/dislocation.hpp"
#include "cofrag/error.hpp"
#include "cofrag/experiment.hpp"
#include "cofrag/kernels.hpp"
#include "cofrag/mass_sequence.hpp"
#include "cofrag/metrics.hpp"
#include "cofrag/oracle.hpp"
#include "cofrag/parallel.hpp"
#include "cofrag/rng.hpp"
#include "cofrag/simulator.hpp"
#include "cofrag/stats.hpp"
