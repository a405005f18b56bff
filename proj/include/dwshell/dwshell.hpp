#pragma once

#include "dwshell/core.hpp"
#include "dwshell/geometry.hpp"
#include "dwshell/shell.hpp"
#include "dwshell/network.hpp"
#include "dwshell/converter.hpp"
#include "dwshell/stability.hpp"
#include "dwshell/oracle.hpp"
#include "dwshell/io.hpp"
