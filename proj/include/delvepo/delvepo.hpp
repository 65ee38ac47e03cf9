#pragma once

// Convenience include for the whole library. Individual headers stay
// self-contained; pull in just what you need for faster builds.

#include "delvepo/checkpoint.hpp"
#include "delvepo/cli.hpp"
#include "delvepo/component.hpp"
#include "delvepo/config.hpp"
#include "delvepo/dataset.hpp"
#include "delvepo/errors.hpp"
#include "delvepo/eval.hpp"
#include "delvepo/evolution.hpp"
#include "delvepo/gateway.hpp"
#include "delvepo/genome.hpp"
#include "delvepo/http_backend.hpp"
#include "delvepo/markup.hpp"
#include "delvepo/memory.hpp"
#include "delvepo/meta_prompts.hpp"
#include "delvepo/metrics.hpp"
#include "delvepo/mock_backend.hpp"
#include "delvepo/prompt_template.hpp"
#include "delvepo/report.hpp"
#include "delvepo/rng.hpp"
#include "delvepo/runner.hpp"
