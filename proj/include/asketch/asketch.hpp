#pragma once

#include <asketch/bounds.hpp>
#include <asketch/kernel.hpp>
#include <asketch/matrices.hpp>
#include <asketch/objectives.hpp>
#include <asketch/refine.hpp>
#include <asketch/report.hpp>
#include <asketch/sketch.hpp>
#include <asketch/solver.hpp>
#include <asketch/sweep.hpp>
