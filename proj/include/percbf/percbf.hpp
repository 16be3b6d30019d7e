#pragma once

#include "percbf/common.hpp"
#include "percbf/envs/environment.hpp"
#include "percbf/envs/two_link_arm.hpp"
#include "percbf/envs/unicycle.hpp"
#include "percbf/geometry/gjk_epa.hpp"
#include "percbf/network/adam.hpp"
#include "percbf/network/dual_net.hpp"
#include "percbf/replay/per_buffer.hpp"
#include "percbf/replay/sum_tree.hpp"
#include "percbf/replay/transition.hpp"
#include "percbf/safety/barrier.hpp"
#include "percbf/safety/qp_filter.hpp"
#include "percbf/trainer/config.hpp"
#include "percbf/trainer/losses.hpp"
#include "percbf/trainer/metric.hpp"
#include "percbf/trainer/theorems.hpp"
#include "percbf/trainer/trainer.hpp"
