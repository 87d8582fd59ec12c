#pragma once

// Umbrella header.

#include "core.hpp"
#include "parallel.hpp"
#include "bezier.hpp"
#include "rasterizer.hpp"
#include "superpixel.hpp"
#include "extraction.hpp"
#include "transport.hpp"
#include "losses.hpp"
#include "optimization.hpp"
#include "json_io.hpp"
#include "svg_io.hpp"
#include "png_io.hpp"
