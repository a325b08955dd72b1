#pragma once

#include "articulate/catalog.hpp"
#include "articulate/course2vec.hpp"
#include "articulate/dispersion.hpp"
#include "articulate/embedding.hpp"
#include "articulate/linalg.hpp"
#include "articulate/model_io.hpp"
#include "articulate/predict.hpp"
#include "articulate/report.hpp"
#include "articulate/ssa.hpp"
#include "articulate/synthetic.hpp"
#include "articulate/threshold.hpp"
