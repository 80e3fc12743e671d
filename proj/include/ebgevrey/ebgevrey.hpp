#pragma once

#include "errors.hpp"
#include "beam_model.hpp"
#include "quadrature.hpp"
#include "banded.hpp"
#include "fem_assembly.hpp"
#include "spectrum.hpp"
#include "resolvent.hpp"
#include "semianalytic.hpp"
#include "timestepper.hpp"
#include "io.hpp"
#include "acceptance.hpp"
