#pragma once

// Umbrella header for the whole library.

#include "snowshr/adam.hpp"
#include "snowshr/charts.hpp"
#include "snowshr/checkpoint.hpp"
#include "snowshr/classes.hpp"
#include "snowshr/csv.hpp"
#include "snowshr/errors.hpp"
#include "snowshr/gradcheck.hpp"
#include "snowshr/hazard.hpp"
#include "snowshr/image.hpp"
#include "snowshr/image_io.hpp"
#include "snowshr/layers.hpp"
#include "snowshr/manifest.hpp"
#include "snowshr/metrics.hpp"
#include "snowshr/montage.hpp"
#include "snowshr/ops.hpp"
#include "snowshr/params.hpp"
#include "snowshr/resize.hpp"
#include "snowshr/rng.hpp"
#include "snowshr/samples.hpp"
#include "snowshr/segmenter.hpp"
#include "snowshr/split.hpp"
#include "snowshr/synth.hpp"
#include "snowshr/tensor.hpp"
#include "snowshr/tiling.hpp"
#include "snowshr/translator.hpp"
#include "snowshr/version.hpp"
