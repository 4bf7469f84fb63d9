// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include "latentem/colatent.hpp"
#include "latentem/contingency_table.hpp"
#include "latentem/divergence.hpp"
#include "latentem/fit_trace.hpp"
#include "latentem/io.hpp"
#include "latentem/latent.hpp"
#include "latentem/network.hpp"
#include "latentem/pipeline.hpp"
#include "latentem/serialize.hpp"
