#pragma once

#include "ergo/error.hpp"
#include "ergo/expr.hpp"
#include "ergo/gfunc.hpp"
#include "ergo/model.hpp"
#include "ergo/pde.hpp"
#include "ergo/longtime.hpp"
#include "ergo/mc.hpp"
#include "ergo/measures.hpp"
