#pragma once

// Umbrella header: reconstructing flowchart graphs from detector output,
// canonical diagram serialization, deterministic and LLM-backed grading of
// multimodal answer sheets, and question-wise score reports.

#include "flowgrade/answer_key.hpp"
#include "flowgrade/canonical.hpp"
#include "flowgrade/config.hpp"
#include "flowgrade/detections.hpp"
#include "flowgrade/errors.hpp"
#include "flowgrade/flowgraph.hpp"
#include "flowgrade/geometry.hpp"
#include "flowgrade/ingest.hpp"
#include "flowgrade/llm_gateway.hpp"
#include "flowgrade/orchestrator.hpp"
#include "flowgrade/report.hpp"
#include "flowgrade/scoring.hpp"
#include "flowgrade/service.hpp"
#include "flowgrade/verdict.hpp"
#include "flowgrade/version.hpp"
