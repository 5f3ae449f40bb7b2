// Copyright Contributors to the tubetopo Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "array_api.hpp"
#include "components.hpp"
#include "error.hpp"
#include "io.hpp"
#include "lengths.hpp"
#include "losses.hpp"
#include "metrics.hpp"
#include "morphology.hpp"
#include "names.hpp"
#include "parallel.hpp"
#include "report.hpp"
#include "resample.hpp"
#include "skeleton.hpp"
#include "synth.hpp"
#include "volume.hpp"
