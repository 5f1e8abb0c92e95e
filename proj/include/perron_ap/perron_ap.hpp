#pragma once

#include "perron_ap/bell.hpp"
#include "perron_ap/conditions.hpp"
#include "perron_ap/errors.hpp"
#include "perron_ap/green.hpp"
#include "perron_ap/gridfun.hpp"
#include "perron_ap/io.hpp"
#include "perron_ap/riccati.hpp"
#include "perron_ap/solver.hpp"
#include "perron_ap/trigpoly.hpp"
#include "perron_ap/util.hpp"
#include "perron_ap/verify.hpp"
