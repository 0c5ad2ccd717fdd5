#pragma once

#include "palmscat/cache.hpp"
#include "palmscat/classify.hpp"
#include "palmscat/dataset.hpp"
#include "palmscat/experiment.hpp"
#include "palmscat/features.hpp"
#include "palmscat/fft.hpp"
#include "palmscat/filterbank.hpp"
#include "palmscat/grid.hpp"
#include "palmscat/image_io.hpp"
#include "palmscat/pca.hpp"
#include "palmscat/scattering.hpp"
