#pragma once

#include "psysym/annotations.hpp"
#include "psysym/classifier.hpp"
#include "psysym/common.hpp"
#include "psysym/config.hpp"
#include "psysym/corpus.hpp"
#include "psysym/embed.hpp"
#include "psysym/explain.hpp"
#include "psysym/kg.hpp"
#include "psysym/mdd.hpp"
#include "psysym/metrics.hpp"
#include "psysym/retrieval.hpp"
#include "psysym/suite.hpp"
#include "psysym/synth.hpp"
#include "psysym/tfidf.hpp"
