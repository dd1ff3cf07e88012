#pragma once

#include "lccvqe/error.hpp"
#include "lccvqe/rng.hpp"
#include "lccvqe/graph.hpp"
#include "lccvqe/statevec.hpp"
#include "lccvqe/ansatz.hpp"
#include "lccvqe/lightcone.hpp"
#include "lccvqe/noise.hpp"
#include "lccvqe/optimize.hpp"
#include "lccvqe/vqe.hpp"
#include "lccvqe/gw.hpp"
#include "lccvqe/dataset.hpp"
#include "lccvqe/config.hpp"
#include "lccvqe/results.hpp"
#include "lccvqe/experiment.hpp"
