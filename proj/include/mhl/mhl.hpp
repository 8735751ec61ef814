#pragma once

#include "mhl/data/align.hpp"
#include "mhl/data/dataset.hpp"
#include "mhl/data/ingest.hpp"
#include "mhl/data/io.hpp"
#include "mhl/data/sample.hpp"
#include "mhl/data/synthetic.hpp"
#include "mhl/error.hpp"
#include "mhl/eval.hpp"
#include "mhl/losses/losses.hpp"
#include "mhl/metrics/metrics.hpp"
#include "mhl/model/config.hpp"
#include "mhl/model/network.hpp"
#include "mhl/model/params.hpp"
#include "mhl/numerics/grad_check.hpp"
#include "mhl/numerics/kernels.hpp"
#include "mhl/numerics/matrix.hpp"
#include "mhl/numerics/ops.hpp"
#include "mhl/numerics/rng.hpp"
#include "mhl/numerics/tape.hpp"
#include "mhl/train/adam.hpp"
#include "mhl/train/checkpoint.hpp"
#include "mhl/train/trainer.hpp"
