#pragma once

#include "mixctl/errors.hpp"
#include "mixctl/functionals.hpp"
#include "mixctl/krotov.hpp"
#include "mixctl/models.hpp"
#include "mixctl/operators.hpp"
#include "mixctl/propagation.hpp"
