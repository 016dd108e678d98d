#pragma once

#include "nlos/experiment.hpp"
#include "nlos/geometry.hpp"
#include "nlos/image.hpp"
#include "nlos/image_io.hpp"
#include "nlos/json_io.hpp"
#include "nlos/measure.hpp"
#include "nlos/noise.hpp"
#include "nlos/object_io.hpp"
#include "nlos/render.hpp"
#include "nlos/scene.hpp"
#include "nlos/track.hpp"
#include "nlos/vec3.hpp"
