#pragma once

#include "banditlab/analysis.hpp"
#include "banditlab/confidence.hpp"
#include "banditlab/environment.hpp"
#include "banditlab/errors.hpp"
#include "banditlab/harness/config.hpp"
#include "banditlab/harness/output.hpp"
#include "banditlab/harness/runner.hpp"
#include "banditlab/linalg.hpp"
#include "banditlab/policies.hpp"
#include "banditlab/schedule.hpp"
#include "banditlab/verify.hpp"
#include "banditlab/warmup.hpp"
