#pragma once

#include "rtge/beta.hpp"
#include "rtge/ensembles.hpp"
#include "rtge/errors.hpp"
#include "rtge/estimators.hpp"
#include "rtge/kernels.hpp"
#include "rtge/oracle.hpp"
#include "rtge/quadrature.hpp"
#include "rtge/rng.hpp"
#include "rtge/specialfn.hpp"
#include "rtge/stats.hpp"
