#pragma once

#include "tts/activation.hpp"
#include "tts/config.hpp"
#include "tts/dynamics.hpp"
#include "tts/errors.hpp"
#include "tts/experiments.hpp"
#include "tts/init.hpp"
#include "tts/network.hpp"
#include "tts/oracles.hpp"
#include "tts/quadratic.hpp"
#include "tts/quadrature.hpp"
#include "tts/record.hpp"
#include "tts/sgd.hpp"
#include "tts/svg.hpp"
#include "tts/targets.hpp"
