#pragma once

// Umbrella header for the interval-valued kriging library.

#include "ikrige/interval.hpp"
#include "ikrige/sample.hpp"
#include "ikrige/variogram.hpp"
#include "ikrige/kriging.hpp"
#include "ikrige/optimizer.hpp"
#include "ikrige/predict.hpp"
#include "ikrige/snowload.hpp"
#include "ikrige/simulate.hpp"
#include "ikrige/cv.hpp"
#include "ikrige/io.hpp"
