#pragma once

#include "httplib.h"

// <resolv.h> (pulled in by httplib) defines `_res` as a macro, which breaks
// Eigen's product kernels when Eigen is included afterwards.
#ifdef _res
#undef _res
#endif
