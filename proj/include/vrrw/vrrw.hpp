#pragma once

#include "vrrw/csv.hpp"
#include "vrrw/dynamics.hpp"
#include "vrrw/equilibria.hpp"
#include "vrrw/error.hpp"
#include "vrrw/graph_model.hpp"
#include "vrrw/harness.hpp"
#include "vrrw/json.hpp"
#include "vrrw/roots.hpp"
#include "vrrw/walk.hpp"
