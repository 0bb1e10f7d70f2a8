#pragma once

#include "userboost/dissimilarity/combined.hpp"
#include "userboost/dissimilarity/dtw.hpp"
#include "userboost/dissimilarity/feature_loss.hpp"
#include "userboost/dissimilarity/keogh.hpp"
#include "userboost/dissimilarity/loss_value.hpp"
#include "userboost/dissimilarity/mse.hpp"
#include "userboost/dissimilarity/series_stats.hpp"
#include "userboost/dissimilarity/soft_dtw.hpp"
