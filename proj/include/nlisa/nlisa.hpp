#pragma once

#include "nlisa/engine.hpp"
#include "nlisa/error.hpp"
#include "nlisa/eval.hpp"
#include "nlisa/fuzzy.hpp"
#include "nlisa/global_scorer.hpp"
#include "nlisa/indices.hpp"
#include "nlisa/kg.hpp"
#include "nlisa/oracle.hpp"
#include "nlisa/query.hpp"
#include "nlisa/score_io.hpp"
#include "nlisa/synthetic.hpp"
#include "nlisa/truth.hpp"
