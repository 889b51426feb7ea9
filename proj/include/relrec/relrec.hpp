#pragma once

#include "relrec/error.hpp"
#include "relrec/core_model.hpp"
#include "relrec/csv.hpp"
#include "relrec/ingest.hpp"
#include "relrec/text_normalize.hpp"
#include "relrec/mentions.hpp"
#include "relrec/expansion.hpp"
#include "relrec/eda.hpp"
#include "relrec/features.hpp"
#include "relrec/classifiers.hpp"
#include "relrec/evaluation.hpp"
#include "relrec/decisions.hpp"
#include "relrec/recommend.hpp"
#include "relrec/engine.hpp"
