#pragma once

// Depth-first object detection: cluster a point cloud into candidates,
// denoise, project to 2D boxes through a DLT-estimated camera matrix, crop,
// classify, threshold, evaluate.

#include "ddet/calibration.hpp"
#include "ddet/classifier.hpp"
#include "ddet/clustering.hpp"
#include "ddet/errors.hpp"
#include "ddet/evaluation.hpp"
#include "ddet/geometry.hpp"
#include "ddet/io.hpp"
#include "ddet/json_io.hpp"
#include "ddet/pipeline.hpp"
#include "ddet/proposal.hpp"
#include "ddet/rng.hpp"
#include "ddet/svd.hpp"
#include "ddet/synth.hpp"
