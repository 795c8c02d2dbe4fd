#pragma once

#include "lpsub/bounds.hpp"
#include "lpsub/certifier.hpp"
#include "lpsub/csv.hpp"
#include "lpsub/dataset.hpp"
#include "lpsub/energy.hpp"
#include "lpsub/errors.hpp"
#include "lpsub/experiments.hpp"
#include "lpsub/hlm.hpp"
#include "lpsub/optimizer.hpp"
#include "lpsub/parallel.hpp"
#include "lpsub/random.hpp"
#include "lpsub/subspace.hpp"
