#pragma once

#include "algorithms.hpp"
#include "game.hpp"
#include "harness.hpp"
#include "mirror.hpp"
#include "ne_oracle.hpp"
#include "network.hpp"
#include "rng.hpp"
