#pragma once

// Umbrella header. The modules declare methods across file boundaries
// (BeanContext and composed instantiation are defined after the runtime), so
// include this rather than individual headers.

#include "compovm/errors.hpp"
#include "compovm/access.hpp"
#include "compovm/value.hpp"
#include "compovm/type.hpp"
#include "compovm/loader.hpp"
#include "compovm/native.hpp"
#include "compovm/composed.hpp"
#include "compovm/runtime.hpp"
#include "compovm/kit.hpp"
#include "compovm/prototype.hpp"
#include "compovm/composer.hpp"
#include "compovm/textio.hpp"
#include "compovm/cli.hpp"
