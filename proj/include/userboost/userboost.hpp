#pragma once

#include "userboost/core/error.hpp"
#include "userboost/core/matrix.hpp"
#include "userboost/core/random.hpp"
#include "userboost/data/csv_io.hpp"
#include "userboost/data/filter.hpp"
#include "userboost/data/gesture.hpp"
#include "userboost/data/ingest.hpp"
#include "userboost/data/manifest.hpp"
#include "userboost/data/mini_dataset.hpp"
#include "userboost/data/normalize.hpp"
#include "userboost/dissimilarity.hpp"
#include "userboost/features/extract.hpp"
#include "userboost/genmodel/checkpoint.hpp"
#include "userboost/genmodel/classifier.hpp"
#include "userboost/genmodel/losses.hpp"
#include "userboost/genmodel/model.hpp"
#include "userboost/genmodel/trainer.hpp"
#include "userboost/auth/random_forest.hpp"
#include "userboost/harness/report.hpp"
#include "userboost/harness/split.hpp"
#include "userboost/harness/tstr.hpp"
#include "userboost/io/dataset_dir.hpp"
#include "userboost/io/svg.hpp"
#include "userboost/metrics/evaluation.hpp"
#include "userboost/sampling/latent_sampling.hpp"
