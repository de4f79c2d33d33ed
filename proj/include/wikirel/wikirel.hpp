#pragma once

#include "wikirel/common.hpp"
#include "wikirel/corpus.hpp"
#include "wikirel/url.hpp"
#include "wikirel/public_suffix.hpp"
#include "wikirel/wikitext.hpp"
#include "wikirel/extractor.hpp"
#include "wikirel/timeline.hpp"
#include "wikirel/features.hpp"
#include "wikirel/labels.hpp"
#include "wikirel/boost.hpp"
#include "wikirel/eval.hpp"
#include "wikirel/experiment.hpp"
