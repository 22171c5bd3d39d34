#pragma once

#include "flab/approx.hpp"
#include "flab/axioms.hpp"
#include "flab/basis.hpp"
#include "flab/chain.hpp"
#include "flab/common.hpp"
#include "flab/diffusion.hpp"
#include "flab/diffusion_spec.hpp"
#include "flab/expm.hpp"
#include "flab/extended.hpp"
#include "flab/grid.hpp"
#include "flab/io.hpp"
#include "flab/norms.hpp"
#include "flab/polynomial.hpp"
#include "flab/presets.hpp"
#include "flab/resolvent.hpp"
#include "flab/rng.hpp"
#include "flab/scenario.hpp"
#include "flab/semigroup.hpp"
#include "flab/transport.hpp"
#include "flab/weight.hpp"
