#ifndef IVAR_IVAR_HPP
#define IVAR_IVAR_HPP

#include "ivar/decomp.hpp"
#include "ivar/estimators.hpp"
#include "ivar/forecast.hpp"
#include "ivar/select.hpp"
#include "ivar/simulate.hpp"
#include "ivar/tscore.hpp"

#endif  // IVAR_IVAR_HPP
