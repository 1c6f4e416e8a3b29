#pragma once

#include "error.hpp"
#include "spaces.hpp"
#include "cone.hpp"
#include "tangent.hpp"
#include "barycenter.hpp"
#include "flow.hpp"
#include "functionals.hpp"
#include "maps.hpp"
#include "ks.hpp"
#include "harness.hpp"
#include "io.hpp"
