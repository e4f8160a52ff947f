#pragma once

#include "dalm/errors.hpp"
#include "dalm/ode.hpp"
#include "dalm/affine.hpp"
#include "dalm/model.hpp"
#include "dalm/calibration.hpp"
#include "dalm/term_model.hpp"
#include "dalm/cox_simulator.hpp"
#include "dalm/special_functions.hpp"
#include "dalm/quadrature.hpp"
#include "dalm/fourier.hpp"
#include "dalm/io.hpp"
