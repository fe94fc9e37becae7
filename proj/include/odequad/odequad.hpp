#pragma once

#include "odequad/bridge.hpp"
#include "odequad/domain.hpp"
#include "odequad/ermakov.hpp"
#include "odequad/errors.hpp"
#include "odequad/expr.hpp"
#include "odequad/oracle.hpp"
#include "odequad/quad.hpp"
#include "odequad/reducible.hpp"
#include "odequad/riccati.hpp"
#include "odequad/roots.hpp"
#include "odequad/solution.hpp"
#include "odequad/support.hpp"
