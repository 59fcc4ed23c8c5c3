#pragma once

#include "greenbiqa/dataset.hpp"
#include "greenbiqa/distortion.hpp"
#include "greenbiqa/error.hpp"
#include "greenbiqa/feature.hpp"
#include "greenbiqa/gbt.hpp"
#include "greenbiqa/image.hpp"
#include "greenbiqa/image_io.hpp"
#include "greenbiqa/kmeans.hpp"
#include "greenbiqa/metrics.hpp"
#include "greenbiqa/model_io.hpp"
#include "greenbiqa/pca.hpp"
#include "greenbiqa/pipeline.hpp"
#include "greenbiqa/random.hpp"
#include "greenbiqa/rft.hpp"
#include "greenbiqa/saab.hpp"
#include "greenbiqa/spatial.hpp"
#include "greenbiqa/spatiocolor.hpp"
#include "greenbiqa/transforms.hpp"
