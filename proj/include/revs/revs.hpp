#pragma once

#include "revs/admm.hpp"
#include "revs/net_model.hpp"
#include "revs/operator_opt.hpp"
#include "revs/report.hpp"
#include "revs/residence_opt.hpp"
#include "revs/scenario.hpp"
#include "revs/tariff_load.hpp"
