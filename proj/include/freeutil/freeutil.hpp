#ifndef FREEUTIL_FREEUTIL_HPP
#define FREEUTIL_FREEUTIL_HPP

#include "freeutil/core.hpp"
#include "freeutil/error.hpp"
#include "freeutil/free_utility.hpp"
#include "freeutil/oracle.hpp"
#include "freeutil/problem.hpp"
#include "freeutil/sequential.hpp"

#endif  // FREEUTIL_FREEUTIL_HPP
