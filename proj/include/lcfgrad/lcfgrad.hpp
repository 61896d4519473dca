#pragma once

// Umbrella header.
#include "lcfgrad/adjoint.hpp"
#include "lcfgrad/config.hpp"
#include "lcfgrad/elasticity.hpp"
#include "lcfgrad/element.hpp"
#include "lcfgrad/errors.hpp"
#include "lcfgrad/fatigue.hpp"
#include "lcfgrad/fdcheck.hpp"
#include "lcfgrad/material.hpp"
#include "lcfgrad/mesh.hpp"
#include "lcfgrad/moo.hpp"
#include "lcfgrad/objective.hpp"
#include "lcfgrad/pipeline.hpp"
#include "lcfgrad/quadrature.hpp"
#include "lcfgrad/vtk.hpp"
