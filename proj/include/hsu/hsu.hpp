#pragma once

#include "hsu/clustering.hpp"
#include "hsu/datamodel.hpp"
#include "hsu/errors.hpp"
#include "hsu/experiment.hpp"
#include "hsu/init.hpp"
#include "hsu/io.hpp"
#include "hsu/metrics.hpp"
#include "hsu/regularizers.hpp"
#include "hsu/synth.hpp"
#include "hsu/unmix.hpp"
