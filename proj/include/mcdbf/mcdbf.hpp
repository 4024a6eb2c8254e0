#pragma once

#include "mcdbf/dbf_ism.hpp"
#include "mcdbf/dbf_mm.hpp"
#include "mcdbf/dbf_sm.hpp"
#include "mcdbf/experiment.hpp"
#include "mcdbf/model.hpp"
#include "mcdbf/rational.hpp"
#include "mcdbf/sim.hpp"
#include "mcdbf/taskgen.hpp"
#include "mcdbf/tuner.hpp"
