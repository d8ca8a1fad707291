#pragma once

#include "orderkit/classes.hpp"
#include "orderkit/expr.hpp"
#include "orderkit/fixtures.hpp"
#include "orderkit/inverse.hpp"
#include "orderkit/karamata.hpp"
#include "orderkit/laplace.hpp"
#include "orderkit/numerics.hpp"
#include "orderkit/report.hpp"
#include "orderkit/verify.hpp"
#include "orderkit/version.hpp"
