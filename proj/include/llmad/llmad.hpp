#pragma once

#include "llmad/error.hpp"
#include "llmad/timeseries.hpp"
#include "llmad/dataset.hpp"
#include "llmad/dtw.hpp"
#include "llmad/retrieval.hpp"
#include "llmad/taxonomy.hpp"
#include "llmad/prompt.hpp"
#include "llmad/report.hpp"
#include "llmad/stub_detector.hpp"
#include "llmad/llm_client.hpp"
#include "llmad/evaluation.hpp"
#include "llmad/pipeline.hpp"
#include "llmad/plot.hpp"
