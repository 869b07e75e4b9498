#pragma once

// Umbrella header for the pose preprocessing toolkit.

#include "poseprep/attention.hpp"
#include "poseprep/augmentation.hpp"
#include "poseprep/augmentation_toml.hpp"
#include "poseprep/error.hpp"
#include "poseprep/io.hpp"
#include "poseprep/missing_values.hpp"
#include "poseprep/normalization.hpp"
#include "poseprep/pipeline.hpp"
#include "poseprep/pose.hpp"
#include "poseprep/rng.hpp"
#include "poseprep/signing_space.hpp"
#include "poseprep/transform.hpp"
#include "poseprep/version.hpp"
