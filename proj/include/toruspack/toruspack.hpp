#pragma once

#include "errors.hpp"
#include "experiment.hpp"
#include "graph.hpp"
#include "io.hpp"
#include "mesh.hpp"
#include "packing.hpp"
#include "uniformize.hpp"
