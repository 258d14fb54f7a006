#ifndef SC3D_SC3D_HPP
#define SC3D_SC3D_HPP

#include "sc3d/acyclic/extract.hpp"
#include "sc3d/acyclic/spectral.hpp"
#include "sc3d/acyclic/unroll.hpp"
#include "sc3d/core/io.hpp"
#include "sc3d/core/parallel.hpp"
#include "sc3d/core/rng.hpp"
#include "sc3d/core/topo.hpp"
#include "sc3d/core/types.hpp"
#include "sc3d/datagen/lorenz96.hpp"
#include "sc3d/datagen/nc8.hpp"
#include "sc3d/datagen/svar.hpp"
#include "sc3d/datagen/tvsem.hpp"
#include "sc3d/eval/metrics.hpp"
#include "sc3d/eval/tracking.hpp"
#include "sc3d/predictor/adam.hpp"
#include "sc3d/predictor/node_predictor.hpp"
#include "sc3d/stage1/design.hpp"
#include "sc3d/stage1/stage1.hpp"
#include "sc3d/stage2/stage2.hpp"
#include "sc3d/pipeline.hpp"
#include "sc3d/config.hpp"
#include "sc3d/experiment.hpp"

#endif  // SC3D_SC3D_HPP
