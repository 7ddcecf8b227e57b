#pragma once

#include "ganfp/attribution.hpp"
#include "ganfp/container.hpp"
#include "ganfp/denoise.hpp"
#include "ganfp/digest.hpp"
#include "ganfp/error.hpp"
#include "ganfp/experiment.hpp"
#include "ganfp/fingerprint.hpp"
#include "ganfp/image.hpp"
#include "ganfp/imageio.hpp"
#include "ganfp/keyvalue.hpp"
#include "ganfp/manifest.hpp"
#include "ganfp/parallel.hpp"
#include "ganfp/random.hpp"
#include "ganfp/reduce.hpp"
#include "ganfp/report.hpp"
#include "ganfp/synthgen.hpp"
#include "ganfp/wavelet.hpp"
