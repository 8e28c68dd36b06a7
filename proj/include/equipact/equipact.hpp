#pragma once

// Umbrella header for the whole library.

#include "core.hpp"
#include "io.hpp"
#include "ingest.hpp"
#include "fft.hpp"
#include "feature_matrix.hpp"
#include "features.hpp"
#include "fusion.hpp"
#include "classifier.hpp"
#include "smoothing.hpp"
#include "evaluation.hpp"
#include "synth.hpp"
#include "pipeline.hpp"
#include "serialize.hpp"
