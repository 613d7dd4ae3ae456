#pragma once

#include "solenoid/common.hpp"
#include "solenoid/periodic.hpp"
#include "solenoid/symbolic.hpp"
#include "solenoid/measure.hpp"
#include "solenoid/entropy.hpp"
#include "solenoid/separation.hpp"
#include "solenoid/partitions.hpp"
#include "solenoid/attractor.hpp"
#include "solenoid/io.hpp"
#include "solenoid/experiment.hpp"
