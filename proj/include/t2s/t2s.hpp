#pragma once

#include "t2s/baselines.hpp"
#include "t2s/common.hpp"
#include "t2s/corpus.hpp"
#include "t2s/evaluation.hpp"
#include "t2s/manifest.hpp"
#include "t2s/remote.hpp"
#include "t2s/scoring.hpp"
#include "t2s/stance.hpp"
#include "t2s/statements.hpp"
