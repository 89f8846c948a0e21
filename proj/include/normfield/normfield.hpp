#pragma once

#include "vec2.hpp"
#include "error.hpp"
#include "numerics.hpp"
#include "norm_spec.hpp"
#include "planar_norm.hpp"
#include "boundary_atlas.hpp"
#include "convexity_modulus.hpp"
#include "vortex_field.hpp"
#include "averaging.hpp"
#include "field_grid.hpp"
#include "kinetic.hpp"
#include "field_analysis.hpp"
#include "io.hpp"
