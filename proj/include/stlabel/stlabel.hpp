#ifndef STLABEL_STLABEL_HPP
#define STLABEL_STLABEL_HPP

#include "align.hpp"
#include "boundaries.hpp"
#include "categories.hpp"
#include "config.hpp"
#include "dataset_io.hpp"
#include "errors.hpp"
#include "expression.hpp"
#include "geometry.hpp"
#include "knn.hpp"
#include "labeling.hpp"
#include "leiden.hpp"
#include "markers.hpp"
#include "metrics.hpp"
#include "normalize.hpp"
#include "parallel.hpp"
#include "pca.hpp"
#include "pipeline.hpp"
#include "png_io.hpp"
#include "slide.hpp"
#include "tiling.hpp"
#include "util.hpp"
#include "wilcoxon.hpp"

#endif
