#pragma once

#include "rjmc/ar_laplace.hpp"
#include "rjmc/commands.hpp"
#include "rjmc/distributions.hpp"
#include "rjmc/ensemble.hpp"
#include "rjmc/error.hpp"
#include "rjmc/finite_spectral.hpp"
#include "rjmc/io.hpp"
#include "rjmc/linalg.hpp"
#include "rjmc/mvn_prob.hpp"
#include "rjmc/probit_rj.hpp"
#include "rjmc/rng.hpp"
#include "rjmc/uq.hpp"
