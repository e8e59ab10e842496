#ifndef PVSEVAL_PVSEVAL_HPP
#define PVSEVAL_PVSEVAL_HPP

#include "pvseval/error.hpp"
#include "pvseval/volume.hpp"
#include "pvseval/nifti.hpp"
#include "pvseval/ccl.hpp"
#include "pvseval/morphology.hpp"
#include "pvseval/metrics.hpp"
#include "pvseval/stats.hpp"
#include "pvseval/rng.hpp"
#include "pvseval/phantom.hpp"
#include "pvseval/csv.hpp"
#include "pvseval/harness.hpp"
#include "pvseval/report.hpp"

#endif  // PVSEVAL_PVSEVAL_HPP
