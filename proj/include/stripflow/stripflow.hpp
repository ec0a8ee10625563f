#pragma once

#include "stripflow/elliptic.hpp"
#include "stripflow/errors.hpp"
#include "stripflow/evolution.hpp"
#include "stripflow/fourier.hpp"
#include "stripflow/grid.hpp"
#include "stripflow/io.hpp"
#include "stripflow/parallel.hpp"
#include "stripflow/params.hpp"
#include "stripflow/profile.hpp"
#include "stripflow/spectrum.hpp"
#include "stripflow/stationary.hpp"
#include "stripflow/strip.hpp"
