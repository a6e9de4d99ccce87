#pragma once

#include "react/assignment.hpp"
#include "react/augment.hpp"
#include "react/clustering.hpp"
#include "react/common.hpp"
#include "react/embedding.hpp"
#include "react/evaluation.hpp"
#include "react/matching.hpp"
#include "react/online.hpp"
#include "react/scene_model.hpp"
#include "react/scenegen.hpp"
