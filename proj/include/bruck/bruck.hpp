// Umbrella header.
#pragma once

#include "bruck/config.hpp"
#include "bruck/dsl.hpp"
#include "bruck/hilbert.hpp"
#include "bruck/iterate.hpp"
#include "bruck/magnitude.hpp"
#include "bruck/monotone.hpp"
#include "bruck/numeric.hpp"
#include "bruck/rates.hpp"
#include "bruck/schedules.hpp"
#include "bruck/verify.hpp"
