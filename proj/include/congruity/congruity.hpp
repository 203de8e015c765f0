#pragma once

#include "congruity/annotation/label_log.hpp"
#include "congruity/annotation/service.hpp"
#include "congruity/datagen.hpp"
#include "congruity/detect/adamw.hpp"
#include "congruity/detect/mlp.hpp"
#include "congruity/detect/model_io.hpp"
#include "congruity/detect/threshold.hpp"
#include "congruity/detect/trainer.hpp"
#include "congruity/embedding.hpp"
#include "congruity/embedding_client.hpp"
#include "congruity/error.hpp"
#include "congruity/evaluation.hpp"
#include "congruity/ingestion.hpp"
#include "congruity/media_stats.hpp"
#include "congruity/pipeline.hpp"
#include "congruity/scoring.hpp"
#include "congruity/synth.hpp"
#include "congruity/thumbnail.hpp"
