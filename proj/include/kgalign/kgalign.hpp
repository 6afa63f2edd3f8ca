#pragma once

#include "kgalign/align.hpp"
#include "kgalign/annindex.hpp"
#include "kgalign/clusterability.hpp"
#include "kgalign/compose.hpp"
#include "kgalign/corpus.hpp"
#include "kgalign/error.hpp"
#include "kgalign/eval.hpp"
#include "kgalign/kgembed.hpp"
#include "kgalign/matrix.hpp"
#include "kgalign/pca.hpp"
#include "kgalign/pipeline.hpp"
#include "kgalign/report.hpp"
#include "kgalign/rng.hpp"
#include "kgalign/synthetic.hpp"
