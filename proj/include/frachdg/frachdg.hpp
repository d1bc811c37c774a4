#pragma once

#include "frachdg/types.hpp"
#include "frachdg/quadrature.hpp"
#include "frachdg/basis.hpp"
#include "frachdg/mesh.hpp"
#include "frachdg/velocity.hpp"
#include "frachdg/problems.hpp"
#include "frachdg/fracop.hpp"
#include "frachdg/assembly.hpp"
#include "frachdg/timestepper.hpp"
#include "frachdg/harness.hpp"
